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

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gwi/kernels.hpp"
#include "gwi/numerics.hpp"

namespace gwi {

// ---------------------------------------------------------------------------
// Flat parameter vector with an index map back to named segments
// ---------------------------------------------------------------------------

struct ParamSegment {
  std::string name;
  Index offset = 0;
  Index rows = 0;
  Index cols = 0;  // 0 marks a vector segment
  Index size() const { return cols == 0 ? rows : rows * cols; }
};

struct ParamVector {
  Vector values;
  std::vector<ParamSegment> segments;

  Index size() const { return values.size(); }

  Index segment_index(const std::string& name) const {
    for (std::size_t i = 0; i < segments.size(); ++i)
      if (segments[i].name == name) return static_cast<Index>(i);
    throw InvalidArgument("ParamVector: unknown segment '" + name + "'");
  }

  Eigen::VectorBlock<Vector> segment(const std::string& name) {
    const ParamSegment& s = segments[segment_index(name)];
    return values.segment(s.offset, s.size());
  }
  Eigen::VectorBlock<const Vector> segment(const std::string& name) const {
    const ParamSegment& s = segments[segment_index(name)];
    return values.segment(s.offset, s.size());
  }
};

// Builds a ParamVector one named block at a time; matrices are stored
// column-major so flatten/unflatten round-trips exactly.
class ParamPacker {
 public:
  void add(const std::string& name, double value) {
    push(name, 1, 0);
    data_.push_back(value);
  }
  void add(const std::string& name, const Vector& v) {
    push(name, v.size(), 0);
    data_.insert(data_.end(), v.data(), v.data() + v.size());
  }
  void add(const std::string& name, const Matrix& m) {
    push(name, m.rows(), m.cols());
    data_.insert(data_.end(), m.data(), m.data() + m.size());
  }

  ParamVector finish() const {
    ParamVector out;
    out.segments = segments_;
    out.values = Eigen::Map<const Vector>(data_.data(), static_cast<Index>(data_.size()));
    return out;
  }

 private:
  void push(const std::string& name, Index rows, Index cols) {
    segments_.push_back({name, static_cast<Index>(data_.size()), rows, cols});
  }
  std::vector<ParamSegment> segments_;
  std::vector<double> data_;
};

inline Matrix unpack_matrix(const ParamVector& p, const std::string& name) {
  const ParamSegment& s = p.segments[p.segment_index(name)];
  require(s.cols > 0, "unpack_matrix: segment '" + name + "' is not a matrix");
  return Eigen::Map<const Matrix>(p.values.data() + s.offset, s.rows, s.cols);
}

inline Vector unpack_vector(const ParamVector& p, const std::string& name) {
  const ParamSegment& s = p.segments[p.segment_index(name)];
  return p.values.segment(s.offset, s.size());
}

inline double unpack_scalar(const ParamVector& p, const std::string& name) {
  const ParamSegment& s = p.segments[p.segment_index(name)];
  require(s.size() == 1, "unpack_scalar: segment '" + name + "' is not a scalar");
  return p.values(s.offset);
}

// ---------------------------------------------------------------------------
// Mean functions
// ---------------------------------------------------------------------------

using MeanFn = std::function<double(const Eigen::Ref<const Vector>&)>;

inline MeanFn zero_mean() {
  return [](const Eigen::Ref<const Vector>&) { return 0.0; };
}

// m_Q(x) = m_P(x) + sum_m beta_m k(x, z_m) with the prior kernel k.
struct SvgpMeanParams {
  Vector beta;
};

inline double svgp_mean_eval(const SvgpMeanParams& params, const ArdKernel& prior,
                             const Matrix& inducing, const MeanFn& prior_mean,
                             const Eigen::Ref<const Vector>& x) {
  if (params.beta.size() != inducing.rows())
    throw DimensionMismatch("svgp_mean_eval: beta/Z size mismatch");
  double value = prior_mean(x);
  for (Index m = 0; m < inducing.rows(); ++m)
    value += params.beta(m) * prior.eval(x, inducing.row(m).transpose());
  return value;
}

// ---------------------------------------------------------------------------
// Tanh multilayer perceptron with manual reverse mode
// ---------------------------------------------------------------------------

struct MlpParams {
  std::vector<Matrix> weights;  // weights[l] maps layer l to layer l+1
  std::vector<Vector> biases;

  Index input_dim() const { return weights.front().cols(); }
  Index output_dim() const { return weights.back().rows(); }
  Index num_layers() const { return static_cast<Index>(weights.size()); }

  Index param_count() const {
    Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      n += weights[l].size() + biases[l].size();
    return n;
  }
};

// widths = {D_0, D_1, ..., D_L, D_out}. Biases start at zero; weights are
// centered uniform scaled by 1/sqrt(fan_in).
inline MlpParams mlp_init(const std::vector<Index>& widths, Rng& rng) {
  require(widths.size() >= 2, "mlp_init: need input and output widths");
  MlpParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Index fan_in = widths[l];
    const Index fan_out = widths[l + 1];
    require(fan_in >= 1 && fan_out >= 1, "mlp_init: widths must be positive");
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (Index i = 0; i < fan_out; ++i)
      for (Index j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-scale, scale);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vector::Zero(fan_out));
  }
  return params;
}

// Cached activations from a batched forward pass. inputs[0] holds the batch
// (one column per point); inputs[l] the post-activation of layer l.
struct MlpCache {
  std::vector<Matrix> inputs;
  Matrix outputs;  // pre-activation of the final layer (the network output)
};

inline MlpCache mlp_forward_batch(const MlpParams& params, const Matrix& x_cols) {
  if (x_cols.rows() != params.input_dim())
    throw DimensionMismatch("mlp_forward: input dimension mismatch");
  MlpCache cache;
  cache.inputs.push_back(x_cols);
  Matrix h = x_cols;
  for (Index l = 0; l < params.num_layers(); ++l) {
    Matrix g = (params.weights[l] * h).colwise() + params.biases[l];
    if (l + 1 < params.num_layers()) {
      h = g.array().tanh();
      cache.inputs.push_back(h);
    } else {
      cache.outputs = std::move(g);
    }
  }
  return cache;
}

inline std::pair<Vector, MlpCache> mlp_forward(const MlpParams& params,
                                               const Eigen::Ref<const Vector>& x) {
  MlpCache cache = mlp_forward_batch(params, Matrix(x));
  return {Vector(cache.outputs.col(0)), std::move(cache)};
}

struct MlpGrad {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Gradient of sum_n output(x_n) . output_grad_n with respect to all weights
// and biases; output_grad has one column per batch point.
inline MlpGrad mlp_backward(const MlpParams& params, const MlpCache& cache,
                            const Matrix& output_grad) {
  if (output_grad.rows() != params.output_dim() ||
      output_grad.cols() != cache.outputs.cols())
    throw ShapeMismatch("mlp_backward: output gradient shape mismatch");
  MlpGrad grad;
  grad.weights.resize(params.weights.size());
  grad.biases.resize(params.biases.size());
  Matrix delta = output_grad;
  for (Index l = params.num_layers() - 1; l >= 0; --l) {
    grad.weights[l] = delta * cache.inputs[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      // tanh'(g) = 1 - h^2 with h the cached post-activation
      delta = (params.weights[l].transpose() * delta).array() *
              (1.0 - cache.inputs[l].array().square());
    }
  }
  return grad;
}

// Variational mean m_Q(x) = m_P(x) + network output (one output per class).
inline Vector dnn_mean_eval(const MlpParams& params, const MeanFn& prior_mean,
                            const Eigen::Ref<const Vector>& x) {
  Vector out = mlp_forward(params, x).first;
  out.array() += prior_mean(x);
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian measure specification
// ---------------------------------------------------------------------------

struct GaussianMeasureSpec {
  MeanFn mean;
  std::shared_ptr<const Kernel> kernel;

  Vector mean_at(const Matrix& x) const {
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out(i) = mean(x.row(i).transpose());
    return out;
  }
};

// Runtime trace-class check under the empirical input measure.
inline void validate_trace_class(const GaussianMeasureSpec& spec, const Matrix& x) {
  const double trace = trace_estimate(*spec.kernel, x);
  if (!std::isfinite(trace))
    throw InvalidVariance("measure kernel has non-finite empirical trace");
}

// ---------------------------------------------------------------------------
// Sigma initialization (SVGP optimum approximated on a batch)
// ---------------------------------------------------------------------------

// L = Chol( (k(Z,Z) + (1/sigma2) (N/N_B) k(Z,X_B) k(X_B,Z))^{-1} )
inline Matrix init_sigma(const ArdKernel& prior, const Matrix& inducing,
                         const Matrix& x_batch, double noise2, Index n_total,
                         Index n_batch) {
  require(noise2 > 0.0, "init_sigma: noise variance must be positive");
  require(n_batch >= 1 && n_total >= n_batch, "init_sigma: invalid batch scaling");
  const Matrix kzz = prior.gram(inducing, inducing);
  const Matrix kzx = prior.gram(inducing, x_batch);
  const double scale = static_cast<double>(n_total) / static_cast<double>(n_batch);
  Matrix c = kzz + (scale / noise2) * (kzx * kzx.transpose());
  c = 0.5 * (c + c.transpose()).eval();
  Matrix c_inv = chol_solve(cholesky(c), Matrix::Identity(c.rows(), c.cols()));
  c_inv = 0.5 * (c_inv + c_inv.transpose()).eval();
  return cholesky(c_inv);
}

}  // namespace gwi
