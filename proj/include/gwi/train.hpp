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

#include <atomic>
#include <chrono>
#include <limits>
#include <optional>
#include <thread>

#include "gwi/dataio.hpp"
#include "gwi/evalcal.hpp"
#include "gwi/models.hpp"

namespace gwi {

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  Index t = 0;

  static AdamState init(Index n) { return {Vector::Zero(n), Vector::Zero(n), 0}; }
};

inline void adam_step(Vector& params, const Vector& grad, AdamState& state,
                      const AdamConfig& cfg) {
  if (params.size() != grad.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw ShapeMismatch("adam_step: parameter/gradient/state size mismatch");
  ++state.t;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  params.array() -= cfg.lr * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + cfg.eps);
}

// ---------------------------------------------------------------------------
// Prior marginal log-likelihood and hyperparameter fitting
// ---------------------------------------------------------------------------

// -1/2 log det(K_ZZ + sigma^2 I) - 1/2 y^T (K_ZZ + sigma^2 I)^{-1} y.
// The -(M/2) log 2pi constant is omitted; it does not move the argmax.
inline double prior_mll(const Vector& y_z, const Matrix& k_zz, double noise2) {
  if (noise2 <= 0.0) throw NonPositiveNoise("prior_mll: sigma^2 must be > 0");
  if (y_z.size() != k_zz.rows()) throw DimensionMismatch("prior_mll: size mismatch");
  Matrix k = k_zz;
  k.diagonal().array() += noise2;
  const Matrix lower = cholesky(k);
  const Vector alpha = chol_solve(lower, Matrix(y_z));
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  return -0.5 * log_det - 0.5 * y_z.dot(alpha);
}

struct MllFitConfig {
  int max_iters = 2000;
  double lr = 0.05;
  double grad_tol = 1e-6;
  double min_log_noise2 = std::log(1e-8);  // keeps 1/sigma^2 usable downstream
};

struct PriorFit {
  ArdParams params;
  double noise2 = 1.0;
  double mll = 0.0;
  int iterations = 0;
};

namespace detail {

// Gradient of the prior MLL with respect to (log sigma_f, log alpha, log sigma).
inline Vector prior_mll_grad(const Vector& y_z, const Matrix& z,
                             const ArdParams& params, double noise2) {
  const Index m = z.rows();
  const Index d_count = z.cols();
  const ArdKernel kernel(params);
  const Matrix k_zz = kernel.gram(z, z);
  Matrix k = k_zz;
  k.diagonal().array() += noise2;
  const Matrix lower = cholesky(k);
  const Vector alpha = chol_solve(lower, Matrix(y_z));
  const Matrix k_inv = chol_solve(lower, Matrix::Identity(m, m));

  auto directional = [&](const Matrix& dk) {
    return 0.5 * alpha.dot(dk * alpha) - 0.5 * (k_inv.cwiseProduct(dk)).sum();
  };

  Vector grad(d_count + 2);
  grad(0) = directional(2.0 * k_zz);  // log sigma_f
  const Vector alpha2 = (2.0 * params.log_alpha).array().exp();
  for (Index d = 0; d < d_count; ++d) {
    Matrix dk(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) {
        const double diff = z(i, d) - z(j, d);
        dk(i, j) = k_zz(i, j) * diff * diff / alpha2(d);
      }
    grad(1 + d) = directional(dk);
  }
  grad(d_count + 1) = directional(2.0 * noise2 * Matrix::Identity(m, m));
  return grad;
}

}  // namespace detail

// Adam ascent on the prior MLL over (log sigma_f, log alpha, log sigma) until
// the iteration cap or gradient norm <= grad_tol. Numerical failures abort
// with the best parameters seen so far; the returned MLL never drops below the
// initial one.
inline PriorFit fit_prior_hyperparams(const Vector& y_z, const Matrix& z,
                                      const ArdParams& init, double noise2_init,
                                      const MllFitConfig& cfg = {}) {
  require(z.rows() >= 2, "fit_prior_hyperparams: need at least two points");
  require(noise2_init > 0.0, "fit_prior_hyperparams: initial sigma^2 must be > 0");
  const Index d_count = z.cols();
  require(init.dim() == d_count, "fit_prior_hyperparams: dimension mismatch");

  Vector theta(d_count + 2);
  theta(0) = init.log_sigma_f;
  theta.segment(1, d_count) = init.log_alpha;
  theta(d_count + 1) = 0.5 * std::log(noise2_init);

  auto unpack = [&](const Vector& t) {
    ArdParams p;
    p.log_sigma_f = t(0);
    p.log_alpha = t.segment(1, d_count);
    const double noise2 =
        std::exp(std::max(2.0 * t(d_count + 1), cfg.min_log_noise2));
    return std::make_pair(p, noise2);
  };

  auto mll_at = [&](const Vector& t) {
    auto [p, noise2] = unpack(t);
    return prior_mll(y_z, ArdKernel(p).gram(z, z), noise2);
  };

  PriorFit best;
  best.params = init;
  best.noise2 = noise2_init;
  best.mll = mll_at(theta);

  AdamState state = AdamState::init(theta.size());
  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  int iter = 0;
  try {
    for (iter = 1; iter <= cfg.max_iters; ++iter) {
      auto [params, noise2] = unpack(theta);
      Vector grad = detail::prior_mll_grad(y_z, z, params, noise2);
      // d noise2 / d log sigma is suppressed once the floor binds
      if (2.0 * theta(d_count + 1) < cfg.min_log_noise2) grad(d_count + 1) = 0.0;
      if (grad.norm() <= cfg.grad_tol) break;
      Vector ascent = -grad;  // adam_step minimizes
      adam_step(theta, ascent, state, adam);
      theta(d_count + 1) = std::max(theta(d_count + 1), 0.5 * cfg.min_log_noise2);
      const double mll = mll_at(theta);
      if (std::isfinite(mll) && mll > best.mll) {
        auto [p2, n2] = unpack(theta);
        best.params = p2;
        best.noise2 = n2;
        best.mll = mll;
      }
    }
  } catch (const Error& e) {
    diag::warn(std::string("fit_prior_hyperparams: stopping early: ") + e.what());
  }
  best.iterations = iter;
  return best;
}

// ---------------------------------------------------------------------------
// Training configuration and reports
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 1000;  // 100 is the classification default, set by the caller
  AdamConfig adam;
  LossConfig loss;
  std::vector<double> grid_multipliers;  // of sqrt(N_train); empty = variant default
  std::vector<Index> grid_m;             // explicit M values override multipliers
  std::uint64_t seed = 0;
  bool train_noise = false;
  MllFitConfig mll;
  int threads = 1;
  std::vector<Index> mlp_hidden = {10, 10};

  void validate() const {
    require(epochs >= 0, "TrainConfig: epochs must be >= 0");
    require(adam.lr > 0.0, "TrainConfig: learning rate must be > 0");
    require(threads >= 1, "TrainConfig: threads must be >= 1");
    loss.validate();
  }
};

struct EpochRecord {
  LossBreakdown mean;  // averaged over the epoch's iterations
  double wall_ms = 0.0;
};

template <typename Model>
struct GridPointResult {
  Index num_inducing = 0;
  bool ok = false;
  std::string error;
  PriorFit prior;
  std::optional<Model> model;
  std::vector<EpochRecord> epochs;
  double val_nll = std::numeric_limits<double>::infinity();
  Vector alpha;  // tempering; length 1 for regression, J for classification
};

template <typename Model>
struct TrainReportT {
  std::uint64_t seed = 0;
  std::vector<GridPointResult<Model>> grid;
  std::size_t chosen = 0;
  double total_wall_ms = 0.0;

  const GridPointResult<Model>& best() const { return grid[chosen]; }
  Index chosen_m() const { return best().num_inducing; }
  const Model& model() const { return *best().model; }
  const std::vector<EpochRecord>& epochs() const { return best().epochs; }
  ParamVector final_params() const { return best().model->pack(); }
};

using TrainReport = TrainReportT<RegressionModel>;
using ClassTrainReport = TrainReportT<ClassificationModel>;

namespace detail {

inline std::vector<Index> resolve_grid(const TrainConfig& cfg, Index n_train,
                                       const std::vector<double>& default_mult) {
  std::vector<Index> grid;
  if (!cfg.grid_m.empty()) {
    grid = cfg.grid_m;
  } else {
    const std::vector<double>& mult =
        cfg.grid_multipliers.empty() ? default_mult : cfg.grid_multipliers;
    const double root = std::sqrt(static_cast<double>(n_train));
    for (double c : mult) grid.push_back(static_cast<Index>(std::llround(c * root)));
  }
  for (Index& m : grid) m = std::min(std::max<Index>(m, 1), n_train);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  require(!grid.empty(), "train: empty inducing-point grid");
  return grid;
}

template <typename Fn>
inline void run_indexed_jobs(std::size_t n_jobs, int threads, Fn&& fn) {
  if (threads <= 1 || n_jobs <= 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(threads), n_jobs);
  for (std::size_t t = 0; t < count; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

// Default prior initialization: unit signal scale, per-dimension input spread
// as the lengthscale guess, noise std 0.5 on the standardized targets.
inline std::pair<ArdParams, double> default_prior_init(const Matrix& x_train) {
  const Index d = x_train.cols();
  Vector alpha(d);
  for (Index j = 0; j < d; ++j) {
    const double mean = x_train.col(j).mean();
    const double var = (x_train.col(j).array() - mean).square().mean();
    alpha(j) = std::sqrt(var) > 1e-6 ? std::sqrt(var) : 1.0;
  }
  return {ArdParams(1.0, alpha), 0.25};
}

// X_S indices for one iteration: from the batch by default, optionally from
// the whole training split.
inline Matrix draw_subsample(const Dataset& data, const std::vector<Index>& batch_idx,
                             const std::vector<Index>& train_idx, const LossConfig& cfg,
                             Rng& rng) {
  const std::vector<Index>& source = cfg.subsample_from_batch ? batch_idx : train_idx;
  const Index n_source = static_cast<Index>(source.size());
  const Index n_sub =
      std::min({cfg.n_subsample, n_source, static_cast<Index>(batch_idx.size())});
  const std::vector<Index> pick = rng.sample_without_replacement(n_source, n_sub);
  std::vector<Index> rows(pick.size());
  for (std::size_t i = 0; i < pick.size(); ++i)
    rows[i] = source[static_cast<std::size_t>(pick[i])];
  return data.rows(rows);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regression training
// ---------------------------------------------------------------------------

inline TrainReport train_regression(const Dataset& data, MeanVariant variant,
                                    const TrainConfig& cfg) {
  cfg.validate();
  require(data.task == TaskKind::kRegression, "train_regression: wrong task kind");
  require(!data.train_idx.empty() && !data.val_idx.empty(),
          "train_regression: dataset must be split first");
  const auto t_start = std::chrono::steady_clock::now();
  const Index n_train = static_cast<Index>(data.train_idx.size());
  const std::vector<double> default_mult =
      variant == MeanVariant::kMlp ? std::vector<double>{0.5, 1.0, 1.5, 2.0}
                                   : std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<Index> grid = detail::resolve_grid(cfg, n_train, default_mult);

  const Matrix x_train = data.rows(data.train_idx);
  const Matrix x_val = data.rows(data.val_idx);
  const Vector y_val = data.targets(data.val_idx);

  TrainReport report;
  report.seed = cfg.seed;
  report.grid.resize(grid.size());

  auto run_point = [&](std::size_t gi) {
    GridPointResult<RegressionModel>& slot = report.grid[gi];
    slot.num_inducing = grid[gi];
    try {
      Rng rng(Rng::derive(cfg.seed, 101 + gi));
      const Index m = grid[gi];

      // Inducing inputs: a subsample of the training data. Fixed for the MLP
      // mean; trainable for the SVGP mean.
      const std::vector<Index> z_pick = rng.sample_without_replacement(n_train, m);
      Matrix z(m, data.dim());
      Vector y_z(m);
      for (Index i = 0; i < m; ++i) {
        z.row(i) = x_train.row(z_pick[static_cast<std::size_t>(i)]);
        y_z(i) = data.y(data.train_idx[static_cast<std::size_t>(
            z_pick[static_cast<std::size_t>(i)])]);
      }

      auto [prior_init, noise2_init] = detail::default_prior_init(x_train);
      slot.prior = m >= 2 ? fit_prior_hyperparams(y_z, z, prior_init, noise2_init, cfg.mll)
                          : PriorFit{prior_init, noise2_init, 0.0, 0};
      const ArdKernel prior_kernel(slot.prior.params);

      const Index n_batch = std::min(cfg.loss.batch_size, n_train);
      std::vector<Index> init_rows(static_cast<std::size_t>(n_batch));
      {
        const std::vector<Index> pick = rng.sample_without_replacement(n_train, n_batch);
        for (Index i = 0; i < n_batch; ++i)
          init_rows[static_cast<std::size_t>(i)] =
              data.train_idx[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
      }
      const Matrix lower0 = init_sigma(prior_kernel, z, data.rows(init_rows),
                                       slot.prior.noise2, n_train, n_batch);

      if (variant == MeanVariant::kSvgp) {
        slot.model.emplace(slot.prior.params, slot.prior.noise2, z, lower0,
                           Vector::Zero(m), /*train_inducing=*/true);
      } else {
        std::vector<Index> widths;
        widths.push_back(data.dim());
        for (Index h : cfg.mlp_hidden) widths.push_back(h);
        widths.push_back(1);
        slot.model.emplace(slot.prior.params, slot.prior.noise2, z, lower0,
                           mlp_init(widths, rng));
      }
      RegressionModel& model = *slot.model;
      model.set_train_noise(cfg.train_noise);
      validate_trace_class(model.prior_measure(), x_train);
      validate_trace_class(model.variational_measure(), x_train);

      ParamVector flat = model.pack();
      AdamState state = AdamState::init(flat.size());
      slot.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t_epoch = std::chrono::steady_clock::now();
        LossBreakdown sum{};
        int iters = 0;
        for (const auto& batch_idx : epoch_batches(data.train_idx, n_batch, rng)) {
          const Batch batch = gather_batch(data, batch_idx);
          const Matrix x_sub =
              detail::draw_subsample(data, batch_idx, data.train_idx, cfg.loss, rng);
          auto [bd, grad] =
              model.loss_and_gradient(batch.x, batch.y, n_train, x_sub, cfg.loss);
          adam_step(flat.values, grad.values, state, cfg.adam);
          model.unpack(flat);
          sum.ell += bd.ell;
          sum.mean_term += bd.mean_term;
          sum.trace_p += bd.trace_p;
          sum.trace_q += bd.trace_q;
          sum.cross_term += bd.cross_term;
          sum.total += bd.total;
          ++iters;
        }
        EpochRecord record;
        const double inv = 1.0 / static_cast<double>(std::max(iters, 1));
        record.mean = {sum.ell * inv,     sum.mean_term * inv, sum.trace_p * inv,
                       sum.trace_q * inv, sum.cross_term * inv, sum.total * inv};
        record.wall_ms = detail::elapsed_ms(t_epoch);
        slot.epochs.push_back(record);
      }

      // Tempering on the validation split, then the selection objective.
      const Vector mean_val = model.mean_at(x_val);
      const Vector var_val =
          (model.rdiag_at(x_val).cwiseMax(0.0).array() + model.noise2()).matrix();
      const double alpha = select_tempering(y_val, mean_val, var_val, data.y_std);
      slot.alpha = Vector::Constant(1, alpha);
      slot.val_nll = mean_regression_nll(y_val, mean_val, var_val, data.y_std, alpha);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.ok = false;
      slot.error = e.what();
      diag::warn("train_regression: grid point M=" + std::to_string(slot.num_inducing) +
                 " failed: " + slot.error);
    }
  };

  detail::run_indexed_jobs(grid.size(), cfg.threads, run_point);

  bool any_ok = false;
  for (std::size_t gi = 0; gi < report.grid.size(); ++gi) {
    if (!report.grid[gi].ok) continue;
    if (!any_ok || report.grid[gi].val_nll < report.grid[report.chosen].val_nll) {
      report.chosen = gi;
      any_ok = true;
    }
  }
  if (!any_ok) throw ConvergenceFailure("train_regression: every grid point failed");
  report.total_wall_ms = detail::elapsed_ms(t_start);
  return report;
}

// ---------------------------------------------------------------------------
// Classification training
// ---------------------------------------------------------------------------

inline ClassTrainReport train_classification(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  require(data.task == TaskKind::kClassification, "train_classification: wrong task");
  require(!data.train_idx.empty() && !data.val_idx.empty(),
          "train_classification: dataset must be split first");
  const auto t_start = std::chrono::steady_clock::now();
  const Index j_count = data.num_classes;
  if (j_count < 2) throw InvalidLabels("train_classification: need at least 2 classes");
  {
    std::vector<bool> seen(static_cast<std::size_t>(j_count), false);
    for (Index i : data.train_idx) {
      const int label = data.labels[static_cast<std::size_t>(i)];
      if (label < 0 || label >= j_count)
        throw InvalidLabels("train_classification: label out of range");
      seen[static_cast<std::size_t>(label)] = true;
    }
    for (bool s : seen)
      if (!s)
        throw InvalidLabels("train_classification: a class is absent from training");
  }

  const Index n_train = static_cast<Index>(data.train_idx.size());
  const std::vector<Index> grid =
      detail::resolve_grid(cfg, n_train, {0.5, 0.75, 1.0});

  const Matrix x_train = data.rows(data.train_idx);
  const Matrix x_val = data.rows(data.val_idx);
  const std::vector<int> labels_val = data.class_labels(data.val_idx);

  // Regression surrogate targets for the prior MLL: standardized labels.
  Vector label_values(n_train);
  for (Index i = 0; i < n_train; ++i)
    label_values(i) = static_cast<double>(
        data.labels[static_cast<std::size_t>(data.train_idx[static_cast<std::size_t>(i)])]);
  const double label_mean = label_values.mean();
  const double label_std =
      std::sqrt((label_values.array() - label_mean).square().mean());
  if (!(label_std > 0.0))
    throw InvalidLabels("train_classification: training labels are constant");

  ClassTrainReport report;
  report.seed = cfg.seed;
  report.grid.resize(grid.size());

  auto run_point = [&](std::size_t gi) {
    GridPointResult<ClassificationModel>& slot = report.grid[gi];
    slot.num_inducing = grid[gi];
    try {
      Rng rng(Rng::derive(cfg.seed, 211 + gi));
      const Index m = grid[gi];
      const std::vector<Index> z_pick = rng.sample_without_replacement(n_train, m);
      Matrix z(m, data.dim());
      Vector y_z(m);
      for (Index i = 0; i < m; ++i) {
        z.row(i) = x_train.row(z_pick[static_cast<std::size_t>(i)]);
        y_z(i) = (label_values(z_pick[static_cast<std::size_t>(i)]) - label_mean) /
                 label_std;
      }
      auto [prior_init, noise2_init] = detail::default_prior_init(x_train);
      slot.prior = m >= 2 ? fit_prior_hyperparams(y_z, z, prior_init, noise2_init, cfg.mll)
                          : PriorFit{prior_init, noise2_init, 0.0, 0};
      const ArdKernel prior_kernel(slot.prior.params);

      const Index n_batch = std::min(cfg.loss.batch_size, n_train);
      std::vector<Index> init_rows(static_cast<std::size_t>(n_batch));
      {
        const std::vector<Index> pick = rng.sample_without_replacement(n_train, n_batch);
        for (Index i = 0; i < n_batch; ++i)
          init_rows[static_cast<std::size_t>(i)] =
              data.train_idx[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
      }
      const Matrix lower0 = init_sigma(prior_kernel, z, data.rows(init_rows),
                                       slot.prior.noise2, n_train, n_batch);
      std::vector<Matrix> lowers(static_cast<std::size_t>(j_count), lower0);

      std::vector<Index> widths;
      widths.push_back(data.dim());
      for (Index h : cfg.mlp_hidden) widths.push_back(h);
      widths.push_back(j_count);
      slot.model.emplace(slot.prior.params, z, std::move(lowers),
                         mlp_init(widths, rng));
      ClassificationModel& model = *slot.model;

      ParamVector flat = model.pack();
      AdamState state = AdamState::init(flat.size());
      slot.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t_epoch = std::chrono::steady_clock::now();
        LossBreakdown sum{};
        int iters = 0;
        for (const auto& batch_idx : epoch_batches(data.train_idx, n_batch, rng)) {
          const Batch batch = gather_batch(data, batch_idx);
          const Matrix x_sub =
              detail::draw_subsample(data, batch_idx, data.train_idx, cfg.loss, rng);
          auto [bd, grad] = model.loss_and_gradient(batch.x, batch.labels, n_train,
                                                    x_sub, cfg.loss);
          adam_step(flat.values, grad.values, state, cfg.adam);
          model.unpack(flat);
          sum.ell += bd.ell;
          sum.mean_term += bd.mean_term;
          sum.trace_p += bd.trace_p;
          sum.trace_q += bd.trace_q;
          sum.cross_term += bd.cross_term;
          sum.total += bd.total;
          ++iters;
        }
        EpochRecord record;
        const double inv = 1.0 / static_cast<double>(std::max(iters, 1));
        record.mean = {sum.ell * inv,     sum.mean_term * inv, sum.trace_p * inv,
                       sum.trace_q * inv, sum.cross_term * inv, sum.total * inv};
        record.wall_ms = detail::elapsed_ms(t_epoch);
        slot.epochs.push_back(record);
      }

      const QuadratureRule rule = gauss_hermite(cfg.loss.quad_order);
      const Matrix means_val = model.means_at(x_val);
      const Matrix vars_val = model.rdiag_at(x_val).cwiseMax(kClassVarianceFloor);
      slot.alpha = select_class_tempering(means_val, vars_val, labels_val,
                                          cfg.loss.label_noise, rule);
      double nll = 0.0;
      for (Index i = 0; i < x_val.rows(); ++i)
        nll += class_nll(labels_val[static_cast<std::size_t>(i)], means_val.col(i),
                         vars_val.col(i), slot.alpha, cfg.loss.label_noise, rule);
      slot.val_nll = nll / static_cast<double>(x_val.rows());
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.ok = false;
      slot.error = e.what();
      diag::warn("train_classification: grid point M=" +
                 std::to_string(slot.num_inducing) + " failed: " + slot.error);
    }
  };

  detail::run_indexed_jobs(grid.size(), cfg.threads, run_point);

  bool any_ok = false;
  for (std::size_t gi = 0; gi < report.grid.size(); ++gi) {
    if (!report.grid[gi].ok) continue;
    if (!any_ok || report.grid[gi].val_nll < report.grid[report.chosen].val_nll) {
      report.chosen = gi;
      any_ok = true;
    }
  }
  if (!any_ok)
    throw ConvergenceFailure("train_classification: every grid point failed");
  report.total_wall_ms = detail::elapsed_ms(t_start);
  return report;
}

}  // namespace gwi
