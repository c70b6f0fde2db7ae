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
#include <memory>
#include <utility>

#include "gwi/numerics.hpp"

namespace gwi {

// ---------------------------------------------------------------------------
// ARD squared-exponential kernel
// ---------------------------------------------------------------------------

// Hyperparameters are stored in log-space so optimization is unconstrained.
struct ArdParams {
  double log_sigma_f = 0.0;
  Vector log_alpha;  // one lengthscale per input dimension

  ArdParams() = default;
  ArdParams(double sigma_f, Vector alpha) {
    require(sigma_f > 0.0, "ArdParams: sigma_f must be positive");
    require(alpha.size() >= 1 && (alpha.array() > 0.0).all(),
            "ArdParams: lengthscales must be positive");
    log_sigma_f = std::log(sigma_f);
    log_alpha = alpha.array().log();
  }

  static ArdParams isotropic(double sigma_f, double alpha, Index dim) {
    return ArdParams(sigma_f, Vector::Constant(dim, alpha));
  }

  Index dim() const { return log_alpha.size(); }
  double sigma_f() const { return std::exp(log_sigma_f); }
  double sigma_f2() const { return std::exp(2.0 * log_sigma_f); }
  Vector alpha() const { return log_alpha.array().exp(); }
};

class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual Index dim() const = 0;
  virtual double eval(const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& y) const = 0;

  // Entry (i, j) is kernel(a_i, b_j) for the rows of a and b.
  virtual Matrix gram(const Matrix& a, const Matrix& b) const {
    check_dims(a, b);
    Matrix out(a.rows(), b.rows());
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < b.rows(); ++j)
        out(i, j) = eval(a.row(i).transpose(), b.row(j).transpose());
    return out;
  }

  virtual Vector diag(const Matrix& x) const {
    require(x.cols() == dim(), "kernel diag: dimension mismatch");
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i)
      out(i) = eval(x.row(i).transpose(), x.row(i).transpose());
    return out;
  }

 protected:
  void check_dims(const Matrix& a, const Matrix& b) const {
    if (a.cols() != dim() || b.cols() != dim())
      throw DimensionMismatch("kernel gram: input dimension mismatch");
  }
};

class ArdKernel final : public Kernel {
 public:
  ArdKernel() = default;
  explicit ArdKernel(ArdParams params) : params_(std::move(params)) {}

  const ArdParams& params() const { return params_; }
  Index dim() const override { return params_.dim(); }

  double eval(const Eigen::Ref<const Vector>& x,
              const Eigen::Ref<const Vector>& y) const override {
    if (x.size() != dim() || y.size() != dim())
      throw DimensionMismatch("ard eval: dimension mismatch");
    const Vector inv_alpha = (-params_.log_alpha).array().exp();
    const double q = ((x - y).array() * inv_alpha.array()).square().sum();
    return params_.sigma_f2() * std::exp(-0.5 * q);
  }

  Matrix gram(const Matrix& a, const Matrix& b) const override {
    check_dims(a, b);
    const Vector inv_alpha = (-params_.log_alpha).array().exp();
    const Matrix as = a * inv_alpha.asDiagonal();
    const Matrix bs = b * inv_alpha.asDiagonal();
    Matrix sq = (-2.0 * as * bs.transpose()).colwise() + as.rowwise().squaredNorm();
    sq.rowwise() += bs.rowwise().squaredNorm().transpose();
    return params_.sigma_f2() * (-0.5 * sq.cwiseMax(0.0)).array().exp();
  }

  Vector diag(const Matrix& x) const override {
    require(x.cols() == dim(), "ard diag: dimension mismatch");
    return Vector::Constant(x.rows(), params_.sigma_f2());
  }

 private:
  ArdParams params_;
};

// ---------------------------------------------------------------------------
// SVGP variational kernel: r(x, x') = k(x, x') + k_Z(x)^T (Sigma - A^{-1}) k_Z(x')
// with A = k(Z, Z) + jitter and Sigma = L L^T.
// ---------------------------------------------------------------------------

class SvgpKernel final : public Kernel {
 public:
  SvgpKernel(ArdParams prior, Matrix inducing, Matrix lower)
      : prior_(std::move(prior)), z_(std::move(inducing)), l_(std::move(lower)) {
    require(z_.rows() >= 1, "SvgpKernel: need at least one inducing input");
    require(z_.cols() == prior_.params().dim(), "SvgpKernel: Z dimension mismatch");
    require(l_.rows() == z_.rows() && l_.cols() == z_.rows(),
            "SvgpKernel: L must be M x M");
    refresh_prior_cache();
    refresh_corr();
  }

  Index dim() const override { return prior_.dim(); }
  Index num_inducing() const { return z_.rows(); }
  const ArdKernel& prior() const { return prior_; }
  const Matrix& inducing() const { return z_; }
  const Matrix& lower() const { return l_; }
  Matrix sigma() const { return l_ * l_.transpose(); }

  // A = k(Z,Z) + jitter, its inverse, and Sigma - A^{-1}.
  const Matrix& kzz() const { return kzz_eff_; }
  const Matrix& kzz_nojitter() const { return kzz_raw_; }
  const Matrix& kzz_inv() const { return kzz_inv_; }
  const Matrix& corr() const { return corr_; }
  double jitter() const { return jitter_; }

  void set_lower(Matrix lower) {
    require(lower.rows() == z_.rows() && lower.cols() == z_.rows(),
            "set_lower: L must be M x M");
    l_ = std::move(lower);
    refresh_corr();
  }

  void set_inducing(Matrix inducing) {
    require(inducing.rows() == z_.rows() && inducing.cols() == z_.cols(),
            "set_inducing: Z shape must be preserved");
    z_ = std::move(inducing);
    refresh_prior_cache();
    refresh_corr();
  }

  // k(Z, X) for the rows of x, one column per row of x.
  Matrix cross(const Matrix& x) const { return prior_.gram(z_, x); }

  double eval(const Eigen::Ref<const Vector>& x,
              const Eigen::Ref<const Vector>& y) const override {
    if (x.size() != dim() || y.size() != dim())
      throw DimensionMismatch("svgp eval: dimension mismatch");
    Vector u(num_inducing()), v(num_inducing());
    for (Index m = 0; m < num_inducing(); ++m) {
      u(m) = prior_.eval(x, z_.row(m).transpose());
      v(m) = prior_.eval(y, z_.row(m).transpose());
    }
    return prior_.eval(x, y) + u.dot(corr_ * v);
  }

  Matrix gram(const Matrix& a, const Matrix& b) const override {
    check_dims(a, b);
    const Matrix ua = cross(a);
    const Matrix ub = cross(b);
    return prior_.gram(a, b) + ua.transpose() * corr_ * ub;
  }

  Vector diag(const Matrix& x) const override {
    require(x.cols() == dim(), "svgp diag: dimension mismatch");
    const Matrix u = cross(x);
    const Matrix quad = (u.array() * (corr_ * u).array()).matrix();
    return prior_.diag(x) + quad.colwise().sum().transpose();
  }

 private:
  void refresh_prior_cache() {
    kzz_raw_ = prior_.gram(z_, z_);
    JitteredChol chol = cholesky_jittered(kzz_raw_);
    jitter_ = chol.jitter;
    kzz_eff_ = kzz_raw_;
    kzz_eff_.diagonal().array() += jitter_;
    kzz_inv_ = chol_solve(chol.lower, Matrix::Identity(z_.rows(), z_.rows()));
    kzz_inv_ = 0.5 * (kzz_inv_ + kzz_inv_.transpose()).eval();
  }

  void refresh_corr() { corr_ = l_ * l_.transpose() - kzz_inv_; }

  ArdKernel prior_;
  Matrix z_;
  Matrix l_;
  Matrix kzz_raw_, kzz_eff_, kzz_inv_, corr_;
  double jitter_ = 0.0;
};

// Empirical trace of the covariance operator: (1/N) sum_n kernel(x_n, x_n).
// Finite output is the runtime check that the kernel is trace-class under the
// empirical input measure.
inline double trace_estimate(const Kernel& kernel, const Matrix& x) {
  require(x.rows() >= 1, "trace_estimate: empty input");
  return kernel.diag(x).mean();
}

inline Matrix gram(const Kernel& kernel, const Matrix& a, const Matrix& b) {
  return kernel.gram(a, b);
}

// ---------------------------------------------------------------------------
// Kernel parameter gradients
// ---------------------------------------------------------------------------

struct ArdGrad {
  double log_sigma_f = 0.0;
  Vector log_alpha;
};

inline ArdGrad ard_grad(const ArdParams& params, const Eigen::Ref<const Vector>& x,
                        const Eigen::Ref<const Vector>& y) {
  ArdKernel kernel(params);
  const double k = kernel.eval(x, y);
  ArdGrad out;
  out.log_sigma_f = 2.0 * k;
  const Vector alpha2 = (2.0 * params.log_alpha).array().exp();
  out.log_alpha = k * (x - y).array().square() / alpha2.array();
  return out;
}

struct SvgpGrad {
  double log_sigma_f = 0.0;
  Vector log_alpha;
  Matrix lower;     // lower-triangular layout matching L
  Matrix inducing;  // M x D
};

// Partial derivatives of r(x, y) with respect to the prior log-hyperparameters,
// the entries of L, and the inducing inputs Z. The additive jitter on k(Z,Z)
// scales with sigma_f^2, which the log-sigma_f path accounts for.
inline SvgpGrad svgp_grad(const SvgpKernel& kernel, const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& y) {
  const ArdParams& prior = kernel.prior().params();
  const Index m_count = kernel.num_inducing();
  const Index d_count = kernel.dim();
  const Matrix& z = kernel.inducing();
  const Matrix& corr = kernel.corr();

  Vector u(m_count), v(m_count);
  for (Index m = 0; m < m_count; ++m) {
    u(m) = kernel.prior().eval(x, z.row(m).transpose());
    v(m) = kernel.prior().eval(y, z.row(m).transpose());
  }
  const Vector corr_v = corr * v;
  const Vector corr_u = corr * u;
  const Vector ainv_u = kernel.kzz_inv() * u;
  const Vector ainv_v = kernel.kzz_inv() * v;
  const Vector alpha2 = (2.0 * prior.log_alpha).array().exp();

  SvgpGrad out;
  // L path: d(u^T Sigma v)/dL = (u v^T + v u^T) L, lower part only.
  out.lower = (u * (v.transpose() * kernel.lower()) +
               v * (u.transpose() * kernel.lower()));
  out.lower.triangularView<Eigen::StrictlyUpper>().setZero();

  // log sigma_f: k, u, v, and A (jitter included) all scale with sigma_f^2.
  const double k_xy = kernel.prior().eval(x, y);
  out.log_sigma_f = 2.0 * k_xy + 4.0 * u.dot(corr_v) +
                    2.0 * ainv_u.dot(kernel.kzz() * ainv_v);

  // log alpha_d: elementwise ARD derivatives through k(x,y), u, v and A.
  out.log_alpha = Vector::Zero(d_count);
  for (Index d = 0; d < d_count; ++d) {
    double g = k_xy * (x(d) - y(d)) * (x(d) - y(d)) / alpha2(d);
    for (Index m = 0; m < m_count; ++m) {
      const double du = u(m) * (x(d) - z(m, d)) * (x(d) - z(m, d)) / alpha2(d);
      const double dv = v(m) * (y(d) - z(m, d)) * (y(d) - z(m, d)) / alpha2(d);
      g += du * corr_v(m) + corr_u(m) * dv;
    }
    for (Index i = 0; i < m_count; ++i)
      for (Index j = 0; j < m_count; ++j) {
        if (i == j) continue;
        const double da = kernel.kzz_nojitter()(i, j) * (z(i, d) - z(j, d)) *
                          (z(i, d) - z(j, d)) / alpha2(d);
        g += ainv_u(i) * da * ainv_v(j);
      }
    out.log_alpha(d) = g;
  }

  // Z path: u, v and A all depend on the inducing inputs.
  out.inducing = Matrix::Zero(m_count, d_count);
  const Matrix q = ainv_u * ainv_v.transpose();
  for (Index m = 0; m < m_count; ++m)
    for (Index d = 0; d < d_count; ++d) {
      double g = corr_v(m) * u(m) * (x(d) - z(m, d)) / alpha2(d) +
                 corr_u(m) * v(m) * (y(d) - z(m, d)) / alpha2(d);
      for (Index mm = 0; mm < m_count; ++mm) {
        if (mm == m) continue;
        g += (q(m, mm) + q(mm, m)) * kernel.kzz_nojitter()(m, mm) *
             (z(mm, d) - z(m, d)) / alpha2(d);
      }
      out.inducing(m, d) = g;
    }
  return out;
}

}  // namespace gwi
