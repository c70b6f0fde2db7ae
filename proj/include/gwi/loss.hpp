// Copyright 2026 The GWI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "gwi/variational.hpp"

namespace gwi {

struct LossConfig {
  Index n_subsample = 100;   // N_S, capped at the batch size when sampling
  Index batch_size = 1000;   // N_B, capped at the training-set size
  Index quad_order = 32;     // Gauss-Hermite order I
  double eigen_floor = 1e-10;  // relative to the leading eigenvalue, before sqrt
  double label_noise = 0.01;   // epsilon in the classification likelihood
  bool subsample_from_batch = true;  // X_S from the batch (else from all of X)

  void validate() const {
    require(n_subsample >= 1, "LossConfig: N_S must be >= 1");
    require(batch_size >= 1, "LossConfig: N_B must be >= 1");
    require(quad_order >= 1, "LossConfig: quadrature order must be >= 1");
    require(eigen_floor >= 0.0 && eigen_floor <= 1e-6,
            "LossConfig: eigenvalue floor must be in [0, 1e-6]");
    require(label_noise > 0.0 && label_noise < 1.0,
            "LossConfig: label noise must be in (0, 1)");
  }
};

struct LossBreakdown {
  double ell = 0.0;
  double mean_term = 0.0;
  double trace_p = 0.0;
  double trace_q = 0.0;
  double cross_term = 0.0;
  double total = 0.0;
};

inline LossBreakdown assemble_breakdown(double ell, double mean_term, double trace_p,
                                        double trace_q, double cross_term) {
  LossBreakdown b{ell, mean_term, trace_p, trace_q, cross_term, 0.0};
  b.total = -ell + mean_term + trace_p + trace_q - 2.0 * cross_term;
  if (!std::isfinite(b.total)) throw NonFiniteLoss("loss breakdown is not finite");
  return b;
}

// ---------------------------------------------------------------------------
// Closed-form expected log-likelihood (regression)
// ---------------------------------------------------------------------------

// Batch-scaled: -(N/2) log(2 pi sigma^2)
//               - (N/N_B) sum_b [(y_b - mQ_b)^2 + r_bb] / (2 sigma^2)
inline double expected_loglik_regression(const Vector& y_b, const Vector& mq_b,
                                         const Vector& rdiag_b, double noise2,
                                         Index n_total, Index n_batch) {
  if (noise2 <= 0.0) throw NonPositiveNoise("expected_loglik: sigma^2 must be > 0");
  if (y_b.size() != mq_b.size() || y_b.size() != rdiag_b.size())
    throw DimensionMismatch("expected_loglik: batch vectors differ in length");
  require(n_batch == y_b.size() && n_total >= n_batch,
          "expected_loglik: inconsistent batch counts");
  const double scale = std::max(1.0, rdiag_b.cwiseAbs().maxCoeff());
  Vector rdiag = rdiag_b;
  for (Index i = 0; i < rdiag.size(); ++i) {
    if (rdiag(i) < -1e-8 * scale)
      throw InvalidVariance("expected_loglik: negative variational variance");
    rdiag(i) = std::max(rdiag(i), 0.0);
  }
  const double nn = static_cast<double>(n_total);
  const double ratio = nn / static_cast<double>(n_batch);
  const double quad = ((y_b - mq_b).array().square() + rdiag.array()).sum();
  return -0.5 * nn * std::log(2.0 * M_PI * noise2) - ratio * quad / (2.0 * noise2);
}

// ---------------------------------------------------------------------------
// Empirical squared-Wasserstein estimator
// ---------------------------------------------------------------------------

struct WassersteinTerms {
  double mean_term = 0.0;
  double trace_p = 0.0;
  double trace_q = 0.0;
  double cross_term = 0.0;
  double value = 0.0;           // raw, may be slightly negative
  Vector eigenvalues;           // real parts, descending, before flooring
  double eigen_floor_abs = 0.0;

  double clamped() const { return std::max(value, 0.0); }
};

// (1/N_B) sum (mP - mQ)^2 + (1/N_B) sum k(x,x) + (1/N_B) sum r(x,x)
//   - (2/sqrt(N_B N_S)) sum_s sqrt(max(lambda_s, floor))
// with lambda_s the eigenvalues of r(X_S, X_B) k(X_B, X_S). The raw value is
// returned; callers clamp at reporting time only.
inline WassersteinTerms wasserstein_hat(const GaussianMeasureSpec& prior,
                                        const GaussianMeasureSpec& variational,
                                        const Matrix& x_batch, const Matrix& x_sub,
                                        double eigen_floor_rel) {
  const Index n_batch = x_batch.rows();
  const Index n_sub = x_sub.rows();
  require(n_batch >= 1 && n_sub >= 1, "wasserstein_hat: empty inputs");
  require(n_sub <= n_batch, "wasserstein_hat: N_S must not exceed N_B");
  require(eigen_floor_rel >= 0.0, "wasserstein_hat: eigenvalue floor must be >= 0");

  WassersteinTerms terms;
  const Vector mp = prior.mean_at(x_batch);
  const Vector mq = variational.mean_at(x_batch);
  terms.mean_term = (mp - mq).squaredNorm() / static_cast<double>(n_batch);
  terms.trace_p = prior.kernel->diag(x_batch).mean();
  terms.trace_q = variational.kernel->diag(x_batch).mean();

  const Matrix r_sb = variational.kernel->gram(x_sub, x_batch);
  const Matrix k_bs = prior.kernel->gram(x_batch, x_sub);
  // When the two Grams coincide (P = Q on a full square batch) the product is
  // K*K and sqrt(lambda_s(K^2)) = |lambda_s(K)|; the symmetric route avoids
  // amplifying eigensolver noise through the square root at zero.
  bool identical_pair = n_sub == n_batch;
  if (identical_pair) {
    const double scale = std::max(k_bs.cwiseAbs().maxCoeff(), 1e-300);
    identical_pair =
        (r_sb - k_bs.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale &&
        (r_sb - r_sb.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
  }
  if (identical_pair) {
    const Vector lambda_k =
        sym_eig(0.5 * (r_sb + r_sb.transpose())).eigenvalues;
    Vector squared = lambda_k.array().square();
    std::sort(squared.data(), squared.data() + squared.size(),
              std::greater<double>());
    terms.eigenvalues = squared;
  } else {
    terms.eigenvalues = eig_real_parts(r_sb * k_bs);
  }
  const double lead = terms.eigenvalues.size() > 0 ? terms.eigenvalues(0) : 0.0;
  terms.eigen_floor_abs = eigen_floor_rel * std::max(lead, 0.0);
  double sum_roots = 0.0;
  for (Index s = 0; s < terms.eigenvalues.size(); ++s)
    sum_roots += std::sqrt(std::max(terms.eigenvalues(s), terms.eigen_floor_abs));
  terms.cross_term =
      sum_roots / std::sqrt(static_cast<double>(n_batch) * static_cast<double>(n_sub));
  terms.value =
      terms.mean_term + terms.trace_p + terms.trace_q - 2.0 * terms.cross_term;
  return terms;
}

// ---------------------------------------------------------------------------
// Exact discrete Bures-Wasserstein (independent route, used as oracle)
// ---------------------------------------------------------------------------

// W2^2 between N(mP, K/N) and N(mQ, R/N) on the empirical measure:
// (1/N)||mP - mQ||^2 + tr(K/N) + tr(R/N)
//   - 2 tr[ ((K/N)^{1/2} (R/N) (K/N)^{1/2})^{1/2} ]
inline double exact_discrete_w2(const Vector& mp, const Vector& mq, const Matrix& k,
                                const Matrix& r, Index n) {
  require(n >= 1, "exact_discrete_w2: N must be >= 1");
  if (mp.size() != n || mq.size() != n || k.rows() != n || k.cols() != n ||
      r.rows() != n || r.cols() != n)
    throw DimensionMismatch("exact_discrete_w2: inconsistent sizes");
  const double nn = static_cast<double>(n);
  const Matrix k_s = psd_sqrt(k / nn);
  Matrix inner = k_s * (r / nn) * k_s;
  inner = 0.5 * (inner + inner.transpose()).eval();
  const SymEig eig = sym_eig(inner);
  double trace_root = 0.0;
  for (Index i = 0; i < n; ++i) trace_root += std::sqrt(std::max(eig.eigenvalues(i), 0.0));
  return (mp - mq).squaredNorm() / nn + k.trace() / nn + r.trace() / nn -
         2.0 * trace_root;
}

// ---------------------------------------------------------------------------
// Generalized loss, regression
// ---------------------------------------------------------------------------

inline LossBreakdown regression_loss(const GaussianMeasureSpec& prior,
                                     const GaussianMeasureSpec& variational,
                                     const Matrix& x_batch, const Vector& y_batch,
                                     Index n_total, const Matrix& x_sub, double noise2,
                                     const LossConfig& cfg) {
  cfg.validate();
  const Vector mq = variational.mean_at(x_batch);
  const Vector rdiag = variational.kernel->diag(x_batch);
  const double ell = expected_loglik_regression(y_batch, mq, rdiag, noise2,
                                                n_total, x_batch.rows());
  const WassersteinTerms w =
      wasserstein_hat(prior, variational, x_batch, x_sub, cfg.eigen_floor);
  return assemble_breakdown(ell, w.mean_term, w.trace_p, w.trace_q, w.cross_term);
}

// ---------------------------------------------------------------------------
// Multiclass argmax probability via Gauss-Hermite quadrature
// ---------------------------------------------------------------------------

inline constexpr double kClassVarianceFloor = 1e-12;

struct ClassProb {
  double value = 0.0;
  Vector d_mean;  // dS/d m_l for every class l
  Vector d_var;   // dS/d r_l for every class l (zero where the floor is active)
};

// S(x, j) = (1/sqrt(pi)) sum_i w_i prod_{l != j}
//           Phi( (sqrt(2 r_j) xi_i + m_j - m_l) / sqrt(r_l) )
inline ClassProb class_prob_with_grad(Index j, const Vector& means, const Vector& vars,
                                      const QuadratureRule& rule) {
  const Index num_classes = means.size();
  require(num_classes >= 2, "class_prob_S: need at least two classes");
  require(j >= 0 && j < num_classes, "class_prob_S: class index out of range");
  if (vars.size() != num_classes)
    throw DimensionMismatch("class_prob_S: means/vars length mismatch");
  if (!means.allFinite() || !vars.allFinite())
    throw InvalidVariance("class_prob_S: non-finite inputs");

  Vector floored = vars.cwiseMax(kClassVarianceFloor);
  std::vector<bool> floor_active(num_classes);
  for (Index l = 0; l < num_classes; ++l)
    floor_active[l] = vars(l) < kClassVarianceFloor;
  const Vector roots = floored.array().sqrt();
  const double sj = std::sqrt(2.0 * floored(j));

  ClassProb out;
  out.d_mean = Vector::Zero(num_classes);
  out.d_var = Vector::Zero(num_classes);
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  double sum = 0.0;
  std::vector<double> cdf(num_classes), pdf(num_classes), zval(num_classes);
  for (Index i = 0; i < rule.order(); ++i) {
    const double xi = rule.nodes(i);
    for (Index l = 0; l < num_classes; ++l) {
      if (l == j) continue;
      zval[l] = (sj * xi + means(j) - means(l)) / roots(l);
      cdf[l] = normal_cdf(zval[l]);
      pdf[l] = normal_pdf(zval[l]);
    }
    double prod = 1.0;
    for (Index l = 0; l < num_classes; ++l)
      if (l != j) prod *= cdf[l];
    sum += rule.weights(i) * prod;

    for (Index l = 0; l < num_classes; ++l) {
      if (l == j) continue;
      double loo = 1.0;  // product excluding class l
      for (Index ll = 0; ll < num_classes; ++ll)
        if (ll != j && ll != l) loo *= cdf[ll];
      const double w_phi = rule.weights(i) * loo * pdf[l];
      out.d_mean(j) += w_phi / roots(l);
      out.d_mean(l) -= w_phi / roots(l);
      if (!floor_active[j]) out.d_var(j) += w_phi * xi / (sj * roots(l));
      if (!floor_active[l]) out.d_var(l) -= w_phi * zval[l] / (2.0 * floored(l));
    }
  }
  out.value = std::min(std::max(inv_sqrt_pi * sum, 0.0), 1.0);
  out.d_mean *= inv_sqrt_pi;
  out.d_var *= inv_sqrt_pi;
  return out;
}

inline double class_prob_S(Index j, const Vector& means, const Vector& vars,
                           const QuadratureRule& rule) {
  return class_prob_with_grad(j, means, vars, rule).value;
}

// ---------------------------------------------------------------------------
// Classification expected log-likelihood and loss
// ---------------------------------------------------------------------------

// Batch-scaled two-term approximation:
// (N/N_B) sum_b [ log(1-eps) S_b + log(eps/(J-1)) (1 - S_b) ]
// where S_b = S(x_b, y_b).
inline double classification_ell(const Vector& s_at_label, double label_noise,
                                 Index num_classes, Index n_total, Index n_batch) {
  require(label_noise > 0.0 && label_noise < 1.0,
          "classification_ell: label noise must be in (0,1)");
  require(num_classes >= 2, "classification_ell: need at least two classes");
  require(n_batch == s_at_label.size() && n_total >= n_batch,
          "classification_ell: inconsistent batch counts");
  const double log_hit = std::log1p(-label_noise);
  const double log_miss = std::log(label_noise / static_cast<double>(num_classes - 1));
  const double ratio = static_cast<double>(n_total) / static_cast<double>(n_batch);
  double sum = 0.0;
  for (Index b = 0; b < s_at_label.size(); ++b)
    sum += log_hit * s_at_label(b) + log_miss * (1.0 - s_at_label(b));
  return ratio * sum;
}

// L = -ELL + sum_j W2_hat(P_j, Q_j); one measure pair per class.
inline LossBreakdown classification_loss(
    const std::vector<GaussianMeasureSpec>& priors,
    const std::vector<GaussianMeasureSpec>& variationals, const Matrix& x_batch,
    const std::vector<int>& labels, Index n_total, const Matrix& x_sub,
    const LossConfig& cfg) {
  cfg.validate();
  const Index num_classes = static_cast<Index>(priors.size());
  require(num_classes >= 2, "classification_loss: need at least two classes");
  require(variationals.size() == priors.size(),
          "classification_loss: measure count mismatch");
  const Index n_batch = x_batch.rows();
  require(static_cast<Index>(labels.size()) == n_batch,
          "classification_loss: label count mismatch");

  Matrix means(num_classes, n_batch);
  Matrix vars(num_classes, n_batch);
  for (Index j = 0; j < num_classes; ++j) {
    means.row(j) = variationals[j].mean_at(x_batch).transpose();
    vars.row(j) = variationals[j].kernel->diag(x_batch).transpose();
  }
  const QuadratureRule rule = gauss_hermite(cfg.quad_order);
  Vector s_at_label(n_batch);
  for (Index b = 0; b < n_batch; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    require(label >= 0 && label < num_classes, "classification_loss: label out of range");
    s_at_label(b) = class_prob_S(label, means.col(b), vars.col(b), rule);
  }
  const double ell = classification_ell(s_at_label, cfg.label_noise, num_classes,
                                        n_total, n_batch);
  double mean_term = 0.0, trace_p = 0.0, trace_q = 0.0, cross_term = 0.0;
  for (Index j = 0; j < num_classes; ++j) {
    const WassersteinTerms w = wasserstein_hat(priors[j], variationals[j], x_batch,
                                               x_sub, cfg.eigen_floor);
    mean_term += w.mean_term;
    trace_p += w.trace_p;
    trace_q += w.trace_q;
    cross_term += w.cross_term;
  }
  return assemble_breakdown(ell, mean_term, trace_p, trace_q, cross_term);
}

}  // namespace gwi
