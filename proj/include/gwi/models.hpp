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

#include <memory>
#include <utility>
#include <vector>

#include "gwi/loss.hpp"

namespace gwi {

// ---------------------------------------------------------------------------
// Lower-triangle packing helpers (only the lower entries of L are parameters)
// ---------------------------------------------------------------------------

inline Index lower_size(Index m) { return m * (m + 1) / 2; }

inline Vector lower_to_vec(const Matrix& l) {
  const Index m = l.rows();
  Vector out(lower_size(m));
  Index k = 0;
  for (Index j = 0; j < m; ++j)
    for (Index i = j; i < m; ++i) out(k++) = l(i, j);
  return out;
}

inline Matrix vec_to_lower(const Vector& v, Index m) {
  require(v.size() == lower_size(m), "vec_to_lower: size mismatch");
  Matrix out = Matrix::Zero(m, m);
  Index k = 0;
  for (Index j = 0; j < m; ++j)
    for (Index i = j; i < m; ++i) out(i, j) = v(k++);
  return out;
}

namespace detail {

// Gradient of the cross term through the eigenvalues of M = R_SB K_BS.
// d lambda_s = (w_s^T dM v_s) / (w_s^T v_s) with left/right eigenvectors; the
// rows of V^{-1} are the left eigenvectors normalized so the denominator is 1.
// Floored eigenvalues and degenerate eigenpairs (|w^T v| <= 1e-12 after
// normalization) contribute zero gradient.
struct CrossTermEval {
  double cross_term = 0.0;  // (1/sqrt(N_B N_S)) sum_s sqrt(max(lambda_s, floor))
  Matrix weight_r;          // N_S x N_B coefficients of dR_SB in d(total)
};

inline CrossTermEval cross_term_eval(const Matrix& r_sb, const Matrix& k_bs,
                                     double eigen_floor_rel, bool want_grad) {
  const Index n_sub = r_sb.rows();
  const Index n_batch = r_sb.cols();
  const Matrix m = r_sb * k_bs;
  Eigen::EigenSolver<Matrix> solver(m, want_grad);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("cross term: eigensolver did not converge");
  const Eigen::VectorXcd lambda = solver.eigenvalues();
  const double max_imag = lambda.imag().cwiseAbs().maxCoeff();
  if (max_imag > 1e-6 * std::max(m.norm(), 1e-300))
    diag::warn("cross term: eigenvalues have noticeable imaginary parts");

  const double lead = lambda.real().maxCoeff();
  const double floor_abs = eigen_floor_rel * std::max(lead, 0.0);
  const double scale =
      1.0 / std::sqrt(static_cast<double>(n_batch) * static_cast<double>(n_sub));

  CrossTermEval out;
  Vector coeff = Vector::Zero(n_sub);
  double sum_roots = 0.0;
  for (Index s = 0; s < n_sub; ++s) {
    const double lam = lambda(s).real();
    sum_roots += std::sqrt(std::max(lam, floor_abs));
    if (lam > floor_abs && lam > 0.0) coeff(s) = 1.0 / (2.0 * std::sqrt(lam));
  }
  out.cross_term = scale * sum_roots;
  if (!want_grad) return out;

  const Eigen::MatrixXcd v = solver.eigenvectors();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(v);
  Eigen::MatrixXcd v_inv = lu.solve(Eigen::MatrixXcd::Identity(n_sub, n_sub));
  if (!v_inv.allFinite()) {
    diag::warn("cross term: eigenvector matrix is singular; gradient dropped");
    out.weight_r = Matrix::Zero(n_sub, n_batch);
    return out;
  }
  for (Index s = 0; s < n_sub; ++s) {
    // Eigen gives unit-norm right eigenvectors, so this norm is 1/|w^T v|.
    if (v_inv.row(s).norm() >= 1e12 && coeff(s) != 0.0) {
      diag::warn("cross term: degenerate eigenpair; its gradient is dropped");
      coeff(s) = 0.0;
    }
  }
  const Eigen::VectorXcd coeff_c = coeff.cast<std::complex<double>>();
  const Matrix g_m = (v * coeff_c.asDiagonal() * v_inv).real().transpose();
  out.weight_r = (-2.0 * scale) * (g_m * k_bs.transpose());
  return out;
}

// grad_z[m, d] += sum_i e[m, i] * (pts[i, d] - z[m, d]) / alpha2[d]
// where e weights the derivative of k(z_m, pts_i) entries.
inline void accumulate_z_pairs(Matrix& grad_z, const Matrix& e, const Matrix& pts,
                               const Matrix& z, const Vector& alpha2) {
  const Vector row_sum = e.rowwise().sum();
  for (Index d = 0; d < z.cols(); ++d)
    grad_z.col(d) +=
        ((e * pts.col(d)) - z.col(d).cwiseProduct(row_sum)) / alpha2(d);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regression model: SVGP kernel with either an SVGP mean or an MLP mean
// ---------------------------------------------------------------------------

enum class MeanVariant { kSvgp, kMlp };

class RegressionModel {
 public:
  // SVGP-mean variant (GWI: SVGP). Inducing inputs may be trainable.
  RegressionModel(ArdParams prior, double noise2, Matrix inducing, Matrix lower,
                  Vector beta, bool train_inducing)
      : variant_(MeanVariant::kSvgp),
        noise2_(noise2),
        beta_(std::move(beta)),
        kernel_(std::move(prior), std::move(inducing), std::move(lower)),
        train_inducing_(train_inducing) {
    require(beta_.size() == kernel_.num_inducing(), "beta/Z size mismatch");
  }

  // MLP-mean variant (GWI-net). Inducing inputs stay fixed.
  RegressionModel(ArdParams prior, double noise2, Matrix inducing, Matrix lower,
                  MlpParams mlp)
      : variant_(MeanVariant::kMlp),
        noise2_(noise2),
        mlp_(std::move(mlp)),
        kernel_(std::move(prior), std::move(inducing), std::move(lower)) {
    require(mlp_.input_dim() == kernel_.dim() && mlp_.output_dim() == 1,
            "mlp must map input dim to one output");
  }

  MeanVariant variant() const { return variant_; }
  double noise2() const { return noise2_; }
  void set_noise2(double n2) { noise2_ = n2; }
  bool train_noise() const { return train_noise_; }
  void set_train_noise(bool flag) { train_noise_ = flag; }
  bool train_inducing() const { return train_inducing_; }
  const SvgpKernel& kernel() const { return kernel_; }
  const Vector& beta() const { return beta_; }
  const MlpParams& mlp() const { return mlp_; }

  GaussianMeasureSpec prior_measure() const {
    return {zero_mean(), std::make_shared<ArdKernel>(kernel_.prior())};
  }
  GaussianMeasureSpec variational_measure() const {
    auto kernel = std::make_shared<SvgpKernel>(kernel_);
    MeanFn mean;
    if (variant_ == MeanVariant::kSvgp) {
      const Vector beta = beta_;
      const ArdKernel prior = kernel_.prior();
      const Matrix z = kernel_.inducing();
      mean = [beta, prior, z](const Eigen::Ref<const Vector>& x) {
        double value = 0.0;
        for (Index m = 0; m < z.rows(); ++m)
          value += beta(m) * prior.eval(x, z.row(m).transpose());
        return value;
      };
    } else {
      const MlpParams mlp = mlp_;
      mean = [mlp](const Eigen::Ref<const Vector>& x) {
        return mlp_forward(mlp, x).first(0);
      };
    }
    return {std::move(mean), std::move(kernel)};
  }

  Vector mean_at(const Matrix& x) const {
    if (variant_ == MeanVariant::kSvgp)
      return kernel_.cross(x).transpose() * beta_;
    return mlp_forward_batch(mlp_, x.transpose()).outputs.row(0).transpose();
  }

  Vector rdiag_at(const Matrix& x) const { return kernel_.diag(x); }

  // -------------------------------------------------------------------------
  // Flat parameter view
  // -------------------------------------------------------------------------

  ParamVector pack() const {
    ParamPacker packer;
    if (variant_ == MeanVariant::kSvgp) {
      packer.add("beta", beta_);
    } else {
      for (Index l = 0; l < mlp_.num_layers(); ++l) {
        packer.add("w" + std::to_string(l), mlp_.weights[l]);
        packer.add("b" + std::to_string(l), mlp_.biases[l]);
      }
    }
    packer.add("l_lower", lower_to_vec(kernel_.lower()));
    if (train_inducing_) packer.add("z", kernel_.inducing());
    if (train_noise_) packer.add("log_noise2", std::log(noise2_));
    return packer.finish();
  }

  void unpack(const ParamVector& params) {
    if (variant_ == MeanVariant::kSvgp) {
      beta_ = unpack_vector(params, "beta");
    } else {
      for (Index l = 0; l < mlp_.num_layers(); ++l) {
        mlp_.weights[l] = unpack_matrix(params, "w" + std::to_string(l));
        mlp_.biases[l] = unpack_vector(params, "b" + std::to_string(l));
      }
    }
    if (train_inducing_) kernel_.set_inducing(unpack_matrix(params, "z"));
    kernel_.set_lower(vec_to_lower(unpack_vector(params, "l_lower"),
                                   kernel_.num_inducing()));
    if (train_noise_) noise2_ = std::exp(unpack_scalar(params, "log_noise2"));
  }

  // -------------------------------------------------------------------------
  // Generalized loss and its analytic gradient
  // -------------------------------------------------------------------------

  LossBreakdown loss(const Matrix& x_batch, const Vector& y_batch, Index n_total,
                     const Matrix& x_sub, const LossConfig& cfg) const {
    return compute(x_batch, y_batch, n_total, x_sub, cfg, nullptr);
  }

  std::pair<LossBreakdown, ParamVector> loss_and_gradient(
      const Matrix& x_batch, const Vector& y_batch, Index n_total,
      const Matrix& x_sub, const LossConfig& cfg) const {
    ParamVector grad;
    LossBreakdown breakdown = compute(x_batch, y_batch, n_total, x_sub, cfg, &grad);
    return {breakdown, std::move(grad)};
  }

 private:
  LossBreakdown compute(const Matrix& x_batch, const Vector& y_batch, Index n_total,
                        const Matrix& x_sub, const LossConfig& cfg,
                        ParamVector* grad_out) const {
    cfg.validate();
    const Index n_batch = x_batch.rows();
    const Index n_sub = x_sub.rows();
    require(y_batch.size() == n_batch, "loss: batch size mismatch");
    require(n_sub >= 1 && n_sub <= n_batch, "loss: N_S must be in [1, N_B]");

    const ArdKernel& prior = kernel_.prior();
    const Matrix u_s = kernel_.cross(x_sub);    // M x N_S
    const Matrix v_b = kernel_.cross(x_batch);  // M x N_B
    const Matrix& corr = kernel_.corr();

    const Vector mq = mean_at(x_batch);
    const Matrix quad = (v_b.array() * (corr * v_b).array()).matrix();
    const Vector rdiag = prior.diag(x_batch) + quad.colwise().sum().transpose();

    const double ell =
        expected_loglik_regression(y_batch, mq, rdiag, noise2_, n_total, n_batch);
    const double mean_term = mq.squaredNorm() / static_cast<double>(n_batch);
    const double trace_p = prior.diag(x_batch).mean();
    const double trace_q = rdiag.mean();

    const Matrix k_sb = prior.gram(x_sub, x_batch);
    const Matrix k_bs = k_sb.transpose();
    const Matrix r_sb = k_sb + u_s.transpose() * corr * v_b;
    const detail::CrossTermEval cross = detail::cross_term_eval(
        r_sb, k_bs, cfg.eigen_floor, grad_out != nullptr);

    LossBreakdown breakdown =
        assemble_breakdown(ell, mean_term, trace_p, trace_q, cross.cross_term);
    if (grad_out == nullptr) return breakdown;

    const double nn = static_cast<double>(n_total);
    const double nb = static_cast<double>(n_batch);

    // d(total)/d mQ(x_b): expected log-likelihood plus the mean term (m_P = 0).
    const Vector mean_w =
        (-(nn / (nb * noise2_)) * (y_batch - mq) + (2.0 / nb) * mq).eval();
    // d(total)/d r(x_b, x_b): expected log-likelihood plus trace_q.
    const Vector diag_w =
        Vector::Constant(n_batch, nn / (2.0 * noise2_ * nb) + 1.0 / nb);

    // L path: d r(p, q) / dL = (u v^T + v u^T) L over all weighted pairs.
    const Matrix p_cross = u_s * cross.weight_r * v_b.transpose();
    const Matrix p_diag = v_b * diag_w.asDiagonal() * v_b.transpose();
    Matrix grad_l =
        (p_cross + p_cross.transpose() + 2.0 * p_diag) * kernel_.lower();
    grad_l.triangularView<Eigen::StrictlyUpper>().setZero();

    ParamPacker packer;
    if (variant_ == MeanVariant::kSvgp) {
      packer.add("beta", Vector(v_b * mean_w));
    } else {
      const MlpCache cache = mlp_forward_batch(mlp_, x_batch.transpose());
      const MlpGrad mlp_grad =
          mlp_backward(mlp_, cache, mean_w.transpose());
      for (Index l = 0; l < mlp_.num_layers(); ++l) {
        packer.add("w" + std::to_string(l), mlp_grad.weights[l]);
        packer.add("b" + std::to_string(l), mlp_grad.biases[l]);
      }
    }
    packer.add("l_lower", lower_to_vec(grad_l));

    if (train_inducing_) {
      const Matrix& z = kernel_.inducing();
      const Vector alpha2 = (2.0 * prior.params().log_alpha).array().exp();
      Matrix grad_z = Matrix::Zero(z.rows(), z.cols());

      // r = k(p, q) + u^T (Sigma - A^{-1}) v: coefficients on du and dv.
      const Matrix cu = corr * v_b * cross.weight_r.transpose();  // M x N_S
      Matrix cv = corr * u_s * cross.weight_r;                    // M x N_B
      cv += 2.0 * (corr * v_b) * diag_w.asDiagonal();
      detail::accumulate_z_pairs(grad_z, (cu.array() * u_s.array()).matrix(), x_sub,
                                 z, alpha2);
      detail::accumulate_z_pairs(grad_z, (cv.array() * v_b.array()).matrix(),
                                 x_batch, z, alpha2);

      // A = k(Z, Z) + jitter path: + (A^{-1} u)^T dA (A^{-1} v) per pair.
      const Matrix au = kernel_.kzz_inv() * u_s;
      const Matrix av = kernel_.kzz_inv() * v_b;
      Matrix q = au * cross.weight_r * av.transpose();
      q += av * diag_w.asDiagonal() * av.transpose();
      const Matrix t = (q + q.transpose()).cwiseProduct(kernel_.kzz_nojitter());
      detail::accumulate_z_pairs(grad_z, t, z, z, alpha2);

      // SVGP mean also depends on Z through k(x_b, z_m).
      if (variant_ == MeanVariant::kSvgp) {
        const Matrix e =
            (beta_.asDiagonal() * v_b) * mean_w.asDiagonal();  // M x N_B
        detail::accumulate_z_pairs(grad_z, e, x_batch, z, alpha2);
      }
      packer.add("z", grad_z);
    }

    if (train_noise_) {
      const double quad =
          ((y_batch - mq).array().square() + rdiag.array().max(0.0)).sum();
      packer.add("log_noise2", 0.5 * nn - (nn / nb) * quad / (2.0 * noise2_));
    }
    *grad_out = packer.finish();
    return breakdown;
  }

  MeanVariant variant_;
  double noise2_;
  Vector beta_;
  MlpParams mlp_;
  SvgpKernel kernel_;
  bool train_inducing_ = false;
  bool train_noise_ = false;
};

// ---------------------------------------------------------------------------
// Classification model: shared MLP trunk with J heads, per-class Sigma_j
// sharing the inducing inputs and the prior kernel
// ---------------------------------------------------------------------------

class ClassificationModel {
 public:
  ClassificationModel(ArdParams prior, Matrix inducing, std::vector<Matrix> lowers,
                      MlpParams mlp)
      : mlp_(std::move(mlp)) {
    require(lowers.size() >= 2, "classification: need at least two classes");
    require(mlp_.output_dim() == static_cast<Index>(lowers.size()),
            "classification: MLP heads must match class count");
    kernels_.reserve(lowers.size());
    for (auto& lower : lowers)
      kernels_.emplace_back(prior, inducing, std::move(lower));
  }

  Index num_classes() const { return static_cast<Index>(kernels_.size()); }
  const MlpParams& mlp() const { return mlp_; }
  const SvgpKernel& kernel(Index j) const { return kernels_[j]; }
  const Matrix& inducing() const { return kernels_.front().inducing(); }
  const ArdKernel& prior() const { return kernels_.front().prior(); }

  // Per-class variational means, one column per row of x.
  Matrix means_at(const Matrix& x) const {
    return mlp_forward_batch(mlp_, x.transpose()).outputs;
  }

  // Per-class r_j(x, x), one column per row of x.
  Matrix rdiag_at(const Matrix& x) const {
    Matrix out(num_classes(), x.rows());
    for (Index j = 0; j < num_classes(); ++j)
      out.row(j) = kernels_[j].diag(x).transpose();
    return out;
  }

  ParamVector pack() const {
    ParamPacker packer;
    for (Index l = 0; l < mlp_.num_layers(); ++l) {
      packer.add("w" + std::to_string(l), mlp_.weights[l]);
      packer.add("b" + std::to_string(l), mlp_.biases[l]);
    }
    for (Index j = 0; j < num_classes(); ++j)
      packer.add("l_lower" + std::to_string(j), lower_to_vec(kernels_[j].lower()));
    return packer.finish();
  }

  void unpack(const ParamVector& params) {
    for (Index l = 0; l < mlp_.num_layers(); ++l) {
      mlp_.weights[l] = unpack_matrix(params, "w" + std::to_string(l));
      mlp_.biases[l] = unpack_vector(params, "b" + std::to_string(l));
    }
    for (Index j = 0; j < num_classes(); ++j)
      kernels_[j].set_lower(vec_to_lower(
          unpack_vector(params, "l_lower" + std::to_string(j)),
          kernels_[j].num_inducing()));
  }

  LossBreakdown loss(const Matrix& x_batch, const std::vector<int>& labels,
                     Index n_total, const Matrix& x_sub, const LossConfig& cfg) const {
    return compute(x_batch, labels, n_total, x_sub, cfg, nullptr);
  }

  std::pair<LossBreakdown, ParamVector> loss_and_gradient(
      const Matrix& x_batch, const std::vector<int>& labels, Index n_total,
      const Matrix& x_sub, const LossConfig& cfg) const {
    ParamVector grad;
    LossBreakdown breakdown = compute(x_batch, labels, n_total, x_sub, cfg, &grad);
    return {breakdown, std::move(grad)};
  }

 private:
  LossBreakdown compute(const Matrix& x_batch, const std::vector<int>& labels,
                        Index n_total, const Matrix& x_sub, const LossConfig& cfg,
                        ParamVector* grad_out) const {
    cfg.validate();
    const Index n_batch = x_batch.rows();
    const Index n_sub = x_sub.rows();
    const Index j_count = num_classes();
    require(static_cast<Index>(labels.size()) == n_batch, "loss: label count mismatch");
    require(n_sub >= 1 && n_sub <= n_batch, "loss: N_S must be in [1, N_B]");

    const ArdKernel& prior = kernels_.front().prior();
    const Matrix u_s = kernels_.front().cross(x_sub);
    const Matrix v_b = kernels_.front().cross(x_batch);
    const Matrix k_sb = prior.gram(x_sub, x_batch);
    const Matrix k_bs = k_sb.transpose();
    const Vector prior_diag = prior.diag(x_batch);

    const Matrix means = means_at(x_batch);
    Matrix rdiag(j_count, n_batch);
    for (Index j = 0; j < j_count; ++j) {
      const Matrix quad =
          (v_b.array() * (kernels_[j].corr() * v_b).array()).matrix();
      rdiag.row(j) = prior_diag.transpose() + quad.colwise().sum();
    }

    const QuadratureRule rule = gauss_hermite(cfg.quad_order);
    Vector s_at_label(n_batch);
    std::vector<ClassProb> probs;
    if (grad_out != nullptr) probs.resize(static_cast<std::size_t>(n_batch));
    for (Index b = 0; b < n_batch; ++b) {
      const int label = labels[static_cast<std::size_t>(b)];
      require(label >= 0 && label < j_count, "loss: label out of range");
      if (grad_out != nullptr) {
        probs[static_cast<std::size_t>(b)] =
            class_prob_with_grad(label, means.col(b), rdiag.col(b), rule);
        s_at_label(b) = probs[static_cast<std::size_t>(b)].value;
      } else {
        s_at_label(b) = class_prob_S(label, means.col(b), rdiag.col(b), rule);
      }
    }
    const double ell = classification_ell(s_at_label, cfg.label_noise, j_count,
                                          n_total, n_batch);

    double mean_term = 0.0, trace_q = 0.0, cross_term = 0.0;
    const double trace_p = prior_diag.mean() * static_cast<double>(j_count);
    std::vector<detail::CrossTermEval> crosses(static_cast<std::size_t>(j_count));
    for (Index j = 0; j < j_count; ++j) {
      mean_term += means.row(j).squaredNorm() / static_cast<double>(n_batch);
      trace_q += rdiag.row(j).mean();
      const Matrix r_sb = k_sb + u_s.transpose() * kernels_[j].corr() * v_b;
      crosses[static_cast<std::size_t>(j)] = detail::cross_term_eval(
          r_sb, k_bs, cfg.eigen_floor, grad_out != nullptr);
      cross_term += crosses[static_cast<std::size_t>(j)].cross_term;
    }
    LossBreakdown breakdown =
        assemble_breakdown(ell, mean_term, trace_p, trace_q, cross_term);
    if (grad_out == nullptr) return breakdown;

    const double nn = static_cast<double>(n_total);
    const double nb = static_cast<double>(n_batch);
    // d(-ell)/dS_b, constant across the batch.
    const double kappa =
        -(nn / nb) * (std::log1p(-cfg.label_noise) -
                      std::log(cfg.label_noise / static_cast<double>(j_count - 1)));

    Matrix mean_w(j_count, n_batch);  // d(total)/d m_j(x_b)
    Matrix diag_w(j_count, n_batch);  // d(total)/d r_j(x_b, x_b)
    for (Index b = 0; b < n_batch; ++b) {
      const ClassProb& p = probs[static_cast<std::size_t>(b)];
      mean_w.col(b) = kappa * p.d_mean + (2.0 / nb) * means.col(b);
      diag_w.col(b) = kappa * p.d_var + Vector::Constant(j_count, 1.0 / nb);
    }

    ParamPacker packer;
    const MlpCache cache = mlp_forward_batch(mlp_, x_batch.transpose());
    const MlpGrad mlp_grad = mlp_backward(mlp_, cache, mean_w);
    for (Index l = 0; l < mlp_.num_layers(); ++l) {
      packer.add("w" + std::to_string(l), mlp_grad.weights[l]);
      packer.add("b" + std::to_string(l), mlp_grad.biases[l]);
    }
    for (Index j = 0; j < j_count; ++j) {
      const Matrix p_cross =
          u_s * crosses[static_cast<std::size_t>(j)].weight_r * v_b.transpose();
      const Matrix p_diag =
          v_b * diag_w.row(j).asDiagonal() * v_b.transpose();
      Matrix grad_l =
          (p_cross + p_cross.transpose() + 2.0 * p_diag) * kernels_[j].lower();
      grad_l.triangularView<Eigen::StrictlyUpper>().setZero();
      packer.add("l_lower" + std::to_string(j), lower_to_vec(grad_l));
    }
    *grad_out = packer.finish();
    return breakdown;
  }

  MlpParams mlp_;
  std::vector<SvgpKernel> kernels_;
};

// Analytic gradient of the full generalized loss (spec-facing helpers).
inline ParamVector loss_gradient(const RegressionModel& model, const Matrix& x_batch,
                                 const Vector& y_batch, Index n_total,
                                 const Matrix& x_sub, const LossConfig& cfg) {
  return model.loss_and_gradient(x_batch, y_batch, n_total, x_sub, cfg).second;
}

inline ParamVector loss_gradient(const ClassificationModel& model,
                                 const Matrix& x_batch, const std::vector<int>& labels,
                                 Index n_total, const Matrix& x_sub,
                                 const LossConfig& cfg) {
  return model.loss_and_gradient(x_batch, labels, n_total, x_sub, cfg).second;
}

}  // namespace gwi
