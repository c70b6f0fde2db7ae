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

// Test-only brute-force references. These deliberately avoid the library's
// loss/quadrature code paths; they touch only the Rng and basic vector types
// so they stay independent of what they validate.

#pragma once

#include <cmath>
#include <functional>

#include "gwi/numerics.hpp"

namespace gwi::oracles {

struct OracleConfig {
  Index samples = 1000000;
  double fd_step = 1e-5;
  std::uint64_t seed = 0;

  void validate() const {
    require(samples >= 10000, "OracleConfig: need at least 1e4 samples");
    require(fd_step >= 1e-8 && fd_step <= 1e-3, "OracleConfig: step out of range");
  }
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Sample mean of sum_n log N(y_n | f_n, sigma^2) with f_n ~ N(mq_n, r_n),
// independent across n and across draws.
inline McEstimate mc_expected_loglik(const Vector& mq, const Vector& rdiag,
                                     const Vector& y, double noise2, Index samples,
                                     std::uint64_t seed) {
  require(samples >= 1, "mc_expected_loglik: need samples");
  require(mq.size() == rdiag.size() && mq.size() == y.size(),
          "mc_expected_loglik: length mismatch");
  require(noise2 > 0.0, "mc_expected_loglik: sigma^2 must be > 0");
  Rng rng(seed);
  const double log_norm = -0.5 * std::log(2.0 * M_PI * noise2);
  const Vector stddev = rdiag.cwiseMax(0.0).cwiseSqrt();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (Index s = 0; s < samples; ++s) {
    double draw = 0.0;
    for (Index n = 0; n < y.size(); ++n) {
      const double f = mq(n) + stddev(n) * rng.normal();
      const double resid = y(n) - f;
      draw += log_norm - resid * resid / (2.0 * noise2);
    }
    sum += draw;
    sum_sq += draw * draw;
  }
  const double mean = sum / static_cast<double>(samples);
  McEstimate out;
  out.value = mean;
  if (samples > 1) {
    const double var =
        std::max(sum_sq / static_cast<double>(samples) - mean * mean, 0.0);
    out.std_error = std::sqrt(var / static_cast<double>(samples - 1));
  }
  return out;
}

// Fraction of joint independent Gaussian draws whose argmax is class j.
inline McEstimate mc_argmax_prob(const Vector& means, const Vector& vars, Index j,
                                 Index samples, std::uint64_t seed) {
  const Index j_count = means.size();
  require(j_count >= 2, "mc_argmax_prob: need at least two classes");
  require(j >= 0 && j < j_count, "mc_argmax_prob: class index out of range");
  require(vars.size() == j_count, "mc_argmax_prob: length mismatch");
  Rng rng(seed);
  const Vector stddev = vars.cwiseMax(0.0).cwiseSqrt();
  Index hits = 0;
  for (Index s = 0; s < samples; ++s) {
    Index arg = 0;
    double best = means(0) + stddev(0) * rng.normal();
    for (Index l = 1; l < j_count; ++l) {
      const double f = means(l) + stddev(l) * rng.normal();
      if (f > best) {
        best = f;
        arg = l;
      }
    }
    if (arg == j) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  McEstimate out;
  out.value = p;
  out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  return out;
}

// Central finite differences per coordinate.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f,
                          const Vector& params, double step) {
  require(step > 0.0, "fd_gradient: step must be > 0");
  Vector grad(params.size());
  Vector point = params;
  for (Index i = 0; i < params.size(); ++i) {
    point(i) = params(i) + step;
    const double hi = f(point);
    point(i) = params(i) - step;
    const double lo = f(point);
    point(i) = params(i);
    if (!std::isfinite(hi) || !std::isfinite(lo))
      throw NonFiniteLoss("fd_gradient: loss not finite near evaluation point");
    grad(i) = (hi - lo) / (2.0 * step);
  }
  return grad;
}

// Largest |a_i - b_i| relative to the gradient scale; coordinates far below
// the overall scale are compared against that scale instead of themselves.
inline double max_rel_err(const Vector& analytic, const Vector& reference) {
  require(analytic.size() == reference.size(), "max_rel_err: length mismatch");
  const double scale = std::max({reference.cwiseAbs().maxCoeff(),
                                 analytic.cwiseAbs().maxCoeff(), 1e-12});
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double denom =
        std::max({std::abs(reference(i)), std::abs(analytic(i)), 1e-3 * scale});
    worst = std::max(worst, std::abs(analytic(i) - reference(i)) / denom);
  }
  return worst;
}

}  // namespace gwi::oracles
