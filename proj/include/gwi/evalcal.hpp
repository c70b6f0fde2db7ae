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

#include <algorithm>
#include <cmath>
#include <vector>

#include "gwi/loss.hpp"

namespace gwi {

// ---------------------------------------------------------------------------
// Regression predictive distribution and NLL
// ---------------------------------------------------------------------------

struct Predictive {
  double mean = 0.0;
  double variance = 0.0;
};

// Y* | Y ~ N(m_Q(x*), alpha_T (r(x*, x*) + sigma^2))
inline Predictive predictive_regression(double mq, double rdiag, double noise2,
                                        double alpha) {
  if (noise2 <= 0.0) throw NonPositiveNoise("predictive: sigma^2 must be > 0");
  require(alpha > 0.0, "predictive: tempering factor must be > 0");
  if (rdiag < -1e-8 * std::max(1.0, noise2))
    throw InvalidVariance("predictive: negative variational variance");
  return {mq, alpha * (std::max(rdiag, 0.0) + noise2)};
}

// Reported on the original target scale through the +log(sigma_hat_train)
// offset; predictions themselves stay standardized.
inline double regression_nll(double y, double mean, double variance,
                             double sigma_train) {
  if (!(variance > 0.0)) throw InvalidVariance("regression_nll: variance must be > 0");
  require(sigma_train > 0.0, "regression_nll: sigma_hat_train must be > 0");
  const double resid = y - mean;
  return 0.5 * std::log(variance) + resid * resid / (2.0 * variance) +
         0.5 * std::log(2.0 * M_PI) + std::log(sigma_train);
}

inline Vector tempering_grid(Index count = 200, double lo = 0.01, double hi = 2.0) {
  Vector grid(count);
  for (Index i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0
                                : static_cast<double>(i) / static_cast<double>(count - 1);
    grid(i) = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return grid;
}

// Mean validation NLL at a given tempering factor.
inline double mean_regression_nll(const Vector& y, const Vector& mean,
                                  const Vector& var_untempered, double sigma_train,
                                  double alpha) {
  double sum = 0.0;
  for (Index i = 0; i < y.size(); ++i)
    sum += regression_nll(y(i), mean(i), alpha * var_untempered(i), sigma_train);
  return sum / static_cast<double>(y.size());
}

// Grid argmin of the mean validation NLL; first minimum wins.
inline double select_tempering(const Vector& y_val, const Vector& mean,
                               const Vector& var_untempered, double sigma_train,
                               const Vector& grid = tempering_grid()) {
  if (y_val.size() == 0) throw EmptyValidation("select_tempering: empty validation set");
  if (y_val.size() != mean.size() || y_val.size() != var_untempered.size())
    throw LengthMismatch("select_tempering: prediction/target length mismatch");
  require(grid.size() >= 1, "select_tempering: empty grid");
  double best_alpha = grid(0);
  double best_nll = mean_regression_nll(y_val, mean, var_untempered, sigma_train, grid(0));
  for (Index i = 1; i < grid.size(); ++i) {
    const double nll =
        mean_regression_nll(y_val, mean, var_untempered, sigma_train, grid(i));
    if (nll < best_nll) {
      best_nll = nll;
      best_alpha = grid(i);
    }
  }
  return best_alpha;
}

// ---------------------------------------------------------------------------
// Classification prediction, NLL, and per-class tempering
// ---------------------------------------------------------------------------

struct ClassPrediction {
  Vector probs;
  int label = 0;
};

// prob_j = (1 - eps) S(x, j) + eps/(J-1) (1 - S(x, j)), with the per-class
// variances scaled by alpha_j before entering S; ties go to the smallest j.
inline ClassPrediction predict_class(const Vector& means, const Vector& vars,
                                     const Vector& alpha, double label_noise,
                                     const QuadratureRule& rule) {
  const Index j_count = means.size();
  require(alpha.size() == j_count, "predict_class: alpha length mismatch");
  require((alpha.array() > 0.0).all(), "predict_class: tempering factors must be > 0");
  const Vector tempered = vars.cwiseProduct(alpha);
  ClassPrediction out;
  out.probs = Vector(j_count);
  for (Index j = 0; j < j_count; ++j) {
    const double s = class_prob_S(j, means, tempered, rule);
    out.probs(j) = (1.0 - label_noise) * s +
                   label_noise / static_cast<double>(j_count - 1) * (1.0 - s);
  }
  out.label = 0;
  for (Index j = 1; j < j_count; ++j)
    if (out.probs(j) > out.probs(out.label)) out.label = static_cast<int>(j);
  return out;
}

inline double class_nll(int label, const Vector& means, const Vector& vars,
                        const Vector& alpha, double label_noise,
                        const QuadratureRule& rule) {
  const Index j_count = means.size();
  require(label >= 0 && label < j_count, "class_nll: label out of range");
  const Vector tempered = vars.cwiseProduct(alpha);
  const double s = class_prob_S(label, means, tempered, rule);
  return -std::log((1.0 - label_noise) * s +
                   label_noise / static_cast<double>(j_count - 1) * (1.0 - s));
}

// Coordinate descent over the per-class factors (a joint grid would be
// combinatorial); two sweeps over the same log-spaced grid.
inline Vector select_class_tempering(const Matrix& means, const Matrix& vars,
                                     const std::vector<int>& labels,
                                     double label_noise, const QuadratureRule& rule,
                                     const Vector& grid = tempering_grid(),
                                     int sweeps = 2) {
  const Index j_count = means.rows();
  const Index n = means.cols();
  if (n == 0) throw EmptyValidation("select_class_tempering: empty validation set");
  require(static_cast<Index>(labels.size()) == n,
          "select_class_tempering: label count mismatch");
  Vector alpha = Vector::Ones(j_count);
  auto objective = [&](const Vector& a) {
    double sum = 0.0;
    for (Index i = 0; i < n; ++i)
      sum += class_nll(labels[static_cast<std::size_t>(i)], means.col(i), vars.col(i),
                       a, label_noise, rule);
    return sum / static_cast<double>(n);
  };
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (Index j = 0; j < j_count; ++j) {
      Vector candidate = alpha;
      double best = objective(alpha);
      double best_alpha = alpha(j);
      for (Index g = 0; g < grid.size(); ++g) {
        candidate(j) = grid(g);
        const double value = objective(candidate);
        if (value < best) {
          best = value;
          best_alpha = grid(g);
        }
      }
      alpha(j) = best_alpha;
    }
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double rmse(const Vector& predictions, const Vector& targets) {
  if (predictions.size() != targets.size())
    throw LengthMismatch("rmse: length mismatch");
  require(predictions.size() >= 1, "rmse: empty input");
  return std::sqrt((predictions - targets).squaredNorm() /
                   static_cast<double>(predictions.size()));
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw LengthMismatch("accuracy: length mismatch");
  require(!predicted.empty(), "accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// Fraction of targets inside the central 95% predictive interval.
inline double coverage95(const Vector& y, const Vector& mean, const Vector& variance) {
  if (y.size() != mean.size() || y.size() != variance.size())
    throw LengthMismatch("coverage95: length mismatch");
  require(y.size() >= 1, "coverage95: empty input");
  std::size_t inside = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (!(variance(i) > 0.0)) throw InvalidVariance("coverage95: variance must be > 0");
    if (std::abs(y(i) - mean(i)) <= 1.96 * std::sqrt(variance(i))) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(y.size());
}

// Predictive entropy, natural log, 0 log 0 := 0.
inline double entropy(const Vector& probs) {
  double h = 0.0;
  for (Index i = 0; i < probs.size(); ++i)
    if (probs(i) > 0.0) h -= probs(i) * std::log(probs(i));
  return h;
}

// AUC of ranking OOD above ID by entropy: Mann-Whitney with half credit for
// ties.
inline double ood_auc(const Vector& id_entropies, const Vector& ood_entropies) {
  const Index n_id = id_entropies.size();
  const Index n_ood = ood_entropies.size();
  if (n_id == 0 || n_ood == 0) throw EmptyInput("ood_auc: empty input");
  struct Item {
    double value;
    bool is_ood;
  };
  std::vector<Item> items;
  items.reserve(static_cast<std::size_t>(n_id + n_ood));
  for (Index i = 0; i < n_id; ++i) items.push_back({id_entropies(i), false});
  for (Index i = 0; i < n_ood; ++i) items.push_back({ood_entropies(i), true});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.value < b.value; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j + 1 < items.size() && items[j + 1].value == items[i].value) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (items[k].is_ood) rank_sum += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum - 0.5 * static_cast<double>(n_ood) *
                                  (static_cast<double>(n_ood) + 1.0);
  return u / (static_cast<double>(n_ood) * static_cast<double>(n_id));
}

struct MetricsReport {
  double nll_mean = 0.0;
  double nll_std = 0.0;  // across evaluation points
  double rmse = 0.0;     // original target scale (regression)
  double accuracy = 0.0;
  double coverage = 0.0;
  double ood_auc = -1.0;  // -1 when not evaluated
};

}  // namespace gwi
