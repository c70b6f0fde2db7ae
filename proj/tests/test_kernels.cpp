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

#include <gtest/gtest.h>

#include <cmath>

#include "gwi/kernels.hpp"
#include "oracles.hpp"

namespace gwi {
namespace {

ArdParams random_ard(Index dim, Rng& rng) {
  ArdParams params;
  params.log_sigma_f = rng.uniform(-0.5, 0.5);
  params.log_alpha = Vector::Zero(dim);
  for (Index d = 0; d < dim; ++d) params.log_alpha(d) = rng.uniform(-0.5, 0.5);
  return params;
}

SvgpKernel random_svgp(Index dim, Index m, Rng& rng) {
  const ArdParams prior = random_ard(dim, rng);
  const Matrix z = 2.0 * rng.normal_matrix(m, dim);
  Matrix lower = 0.3 * rng.normal_matrix(m, m);
  lower.triangularView<Eigen::StrictlyUpper>().setZero();
  lower.diagonal().array() = lower.diagonal().array().abs() + 0.2;
  return SvgpKernel(prior, z, lower);
}

TEST(ArdKernel, DiagonalValue) {
  const ArdParams params(1.5, Vector::Constant(3, 0.7));
  const ArdKernel kernel(params);
  Vector x(3);
  x << 0.1, -0.2, 0.3;
  EXPECT_NEAR(kernel.eval(x, x), 1.5 * 1.5, 1e-14);
}

TEST(ArdKernel, UnitConfiguration) {
  const ArdKernel kernel(ArdParams(1.0, Vector::Ones(1)));
  Vector x(1), y(1);
  x << 0.0;
  y << 1.0;
  EXPECT_NEAR(kernel.eval(x, y), std::exp(-0.5), 1e-12);
}

TEST(ArdKernel, Symmetry) {
  Rng rng(1);
  const ArdKernel kernel(random_ard(4, rng));
  const Vector x = rng.normal_vector(4);
  const Vector y = rng.normal_vector(4);
  EXPECT_EQ(kernel.eval(x, y), kernel.eval(y, x));
}

TEST(ArdKernel, DimensionMismatchThrows) {
  const ArdKernel kernel(ArdParams(1.0, Vector::Ones(2)));
  EXPECT_THROW(kernel.eval(Vector::Zero(3), Vector::Zero(2)), DimensionMismatch);
}

TEST(Gram, SinglePoint) {
  const ArdKernel kernel(ArdParams(2.0, Vector::Ones(2)));
  const Matrix a = Matrix::Zero(1, 2);
  const Matrix g = gram(kernel, a, a);
  ASSERT_EQ(g.rows(), 1);
  EXPECT_NEAR(g(0, 0), 4.0, 1e-14);
}

TEST(Gram, TransposeSymmetry) {
  Rng rng(2);
  const ArdKernel kernel(random_ard(3, rng));
  const Matrix a = rng.normal_matrix(5, 3);
  const Matrix b = rng.normal_matrix(4, 3);
  EXPECT_LE((kernel.gram(a, b) - kernel.gram(b, a).transpose()).cwiseAbs().maxCoeff(),
            1e-14);
}

TEST(Gram, MatchesEval) {
  Rng rng(3);
  const ArdKernel kernel(random_ard(3, rng));
  const Matrix a = rng.normal_matrix(6, 3);
  const Matrix g = kernel.gram(a, a);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      EXPECT_NEAR(g(i, j), kernel.eval(a.row(i).transpose(), a.row(j).transpose()),
                  1e-12);
}

TEST(Gram, FiveByFivePsd) {
  Rng rng(4);
  const ArdKernel kernel(random_ard(2, rng));
  const Matrix a = rng.normal_matrix(5, 2);
  const SymEig eig = sym_eig(kernel.gram(a, a));
  EXPECT_GE(eig.eigenvalues.minCoeff(), -1e-10);
}

TEST(Gram, PsdPropertyRandomSizes) {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 1 + static_cast<Index>(rng.uniform_int(30));
    const Index dim = 1 + static_cast<Index>(rng.uniform_int(5));
    const ArdKernel kernel(random_ard(dim, rng));
    const Matrix a = rng.normal_matrix(n, dim);
    Matrix g = kernel.gram(a, a);
    EXPECT_LE((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    const SymEig eig = sym_eig(0.5 * (g + g.transpose()));
    EXPECT_GE(eig.eigenvalues.minCoeff(), -1e-8 * g.trace());
  }
}

TEST(SvgpKernel, IdentityRecoveryWithOptimalSigma) {
  // Sigma = A^{-1} makes r coincide with the prior kernel
  Rng rng(6);
  for (int rep = 0; rep < 5; ++rep) {
    const Index dim = 1 + static_cast<Index>(rng.uniform_int(3));
    const Index m = 2 + static_cast<Index>(rng.uniform_int(4));
    const ArdParams prior = random_ard(dim, rng);
    const Matrix z = 2.0 * rng.normal_matrix(m, dim);
    SvgpKernel kernel(prior, z, Matrix::Identity(m, m));
    kernel.set_lower(cholesky(kernel.kzz_inv()));
    const ArdKernel reference(prior);
    for (int k = 0; k < 10; ++k) {
      const Vector x = 2.0 * rng.normal_vector(dim);
      const Vector y = 2.0 * rng.normal_vector(dim);
      EXPECT_NEAR(kernel.eval(x, y), reference.eval(x, y), 1e-9);
    }
  }
}

TEST(SvgpKernel, ZeroSigmaInterpolatesAtInducingPoints) {
  Rng rng(7);
  const Index m = 5;
  const ArdParams prior = random_ard(2, rng);
  const Matrix z = 3.0 * rng.normal_matrix(m, 2);
  const SvgpKernel kernel(prior, z, Matrix::Zero(m, m));
  for (Index j = 0; j < m; ++j)
    EXPECT_NEAR(kernel.eval(z.row(j).transpose(), z.row(j).transpose()), 0.0, 1e-8);
}

TEST(SvgpKernel, PriorReversionFarFromInducingPoints) {
  Rng rng(8);
  const SvgpKernel kernel = random_svgp(2, 4, rng);
  const double sigma_f2 = kernel.prior().params().sigma_f2();
  // 20 lengthscales beyond the inducing points in every coordinate
  const Vector alpha = kernel.prior().params().alpha();
  Vector x = kernel.inducing().colwise().maxCoeff().transpose();
  x += 20.0 * alpha;
  const double k_xx = kernel.prior().eval(x, x);
  const double r_xx = kernel.eval(x, x);
  double max_corr = 0.0;
  for (Index mi = 0; mi < kernel.num_inducing(); ++mi)
    max_corr = std::max(
        max_corr, kernel.prior().eval(x, kernel.inducing().row(mi).transpose()));
  ASSERT_LE(max_corr, 1e-8 * sigma_f2);
  EXPECT_LE(std::abs(r_xx - k_xx), 1e-6 * sigma_f2);
}

TEST(SvgpKernel, PriorReversionQuantifiedBound) {
  // |r(x,x) - k(x,x)| <= ||u||^2 (||A^{-1}|| + ||Sigma||)
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const SvgpKernel kernel = random_svgp(2, 5, rng);
    const Vector x = 4.0 * rng.normal_vector(2);
    Vector u(kernel.num_inducing());
    for (Index mi = 0; mi < kernel.num_inducing(); ++mi)
      u(mi) = kernel.prior().eval(x, kernel.inducing().row(mi).transpose());
    const double bound =
        u.squaredNorm() * (kernel.kzz_inv().norm() + kernel.sigma().norm());
    const double gap = std::abs(kernel.eval(x, x) - kernel.prior().eval(x, x));
    EXPECT_LE(gap, bound + 1e-12);
  }
}

TEST(TraceEstimate, ArdIsSigmaFSquared) {
  Rng rng(10);
  const ArdParams params = random_ard(3, rng);
  const ArdKernel kernel(params);
  const Matrix x = rng.normal_matrix(17, 3);
  EXPECT_NEAR(trace_estimate(kernel, x), params.sigma_f2(), 1e-12);
}

TEST(TraceEstimate, SvgpOptimalSigmaMatchesPrior) {
  Rng rng(11);
  const ArdParams prior = random_ard(2, rng);
  const Matrix z = 2.0 * rng.normal_matrix(4, 2);
  SvgpKernel kernel(prior, z, Matrix::Identity(4, 4));
  kernel.set_lower(cholesky(kernel.kzz_inv()));
  const Matrix x = rng.normal_matrix(12, 2);
  EXPECT_NEAR(trace_estimate(kernel, x), trace_estimate(ArdKernel(prior), x), 1e-9);
}

TEST(TraceEstimate, ZeroSigmaAtInducingPointsIsZero) {
  Rng rng(12);
  const ArdParams prior = random_ard(2, rng);
  const Matrix z = 3.0 * rng.normal_matrix(5, 2);
  const SvgpKernel kernel(prior, z, Matrix::Zero(5, 5));
  EXPECT_NEAR(trace_estimate(kernel, z), 0.0, 1e-8);
}

TEST(TraceEstimate, PermutationInvariant) {
  Rng rng(13);
  const SvgpKernel kernel = random_svgp(2, 4, rng);
  Matrix x = rng.normal_matrix(9, 2);
  const double before = trace_estimate(kernel, x);
  const auto perm = rng.permutation(9);
  Matrix shuffled(9, 2);
  for (Index i = 0; i < 9; ++i) shuffled.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  EXPECT_NEAR(trace_estimate(kernel, shuffled), before, 1e-12);
}

TEST(KernelGrad, ArdLogSigmaAtCoincidentPoints) {
  const ArdParams params(1.3, Vector::Constant(2, 0.9));
  const Vector x = Vector::Zero(2);
  const ArdGrad grad = ard_grad(params, x, x);
  EXPECT_NEAR(grad.log_sigma_f, 2.0 * params.sigma_f2(), 1e-12);
  EXPECT_NEAR(grad.log_alpha.cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(KernelGrad, ArdMatchesFiniteDifferences) {
  Rng rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    const Index dim = 1 + static_cast<Index>(rng.uniform_int(4));
    const ArdParams params = random_ard(dim, rng);
    const Vector x = rng.normal_vector(dim);
    const Vector y = rng.normal_vector(dim);
    const ArdGrad grad = ard_grad(params, x, y);

    Vector theta(dim + 1);
    theta(0) = params.log_sigma_f;
    theta.tail(dim) = params.log_alpha;
    const auto value = [&](const Vector& t) {
      ArdParams p;
      p.log_sigma_f = t(0);
      p.log_alpha = t.tail(dim);
      return ArdKernel(p).eval(x, y);
    };
    const Vector fd = oracles::fd_gradient(value, theta, 1e-5);
    Vector analytic(dim + 1);
    analytic(0) = grad.log_sigma_f;
    analytic.tail(dim) = grad.log_alpha;
    EXPECT_LE(oracles::max_rel_err(analytic, fd), 1e-5);
  }
}

TEST(KernelGrad, SvgpMatchesFiniteDifferences) {
  Rng rng(15);
  for (int rep = 0; rep < 5; ++rep) {
    const Index dim = 1 + static_cast<Index>(rng.uniform_int(2));
    const Index m = 2 + static_cast<Index>(rng.uniform_int(3));
    const SvgpKernel kernel = random_svgp(dim, m, rng);
    const Vector x = rng.normal_vector(dim);
    const Vector y = rng.normal_vector(dim);
    const SvgpGrad grad = svgp_grad(kernel, x, y);

    // hyperparameters + full L + Z in one flat vector
    const Index n_l = m * m;
    Vector theta(1 + dim + n_l + m * dim);
    theta(0) = kernel.prior().params().log_sigma_f;
    theta.segment(1, dim) = kernel.prior().params().log_alpha;
    theta.segment(1 + dim, n_l) =
        Eigen::Map<const Vector>(kernel.lower().data(), n_l);
    theta.tail(m * dim) = Eigen::Map<const Vector>(kernel.inducing().data(), m * dim);

    const auto value = [&](const Vector& t) {
      ArdParams p;
      p.log_sigma_f = t(0);
      p.log_alpha = t.segment(1, dim);
      Matrix lower = Eigen::Map<const Matrix>(t.data() + 1 + dim, m, m);
      lower.triangularView<Eigen::StrictlyUpper>().setZero();
      const Matrix z = Eigen::Map<const Matrix>(t.data() + 1 + dim + n_l, m, dim);
      return SvgpKernel(p, z, lower).eval(x, y);
    };
    const Vector fd = oracles::fd_gradient(value, theta, 1e-5);

    Vector analytic(theta.size());
    analytic(0) = grad.log_sigma_f;
    analytic.segment(1, dim) = grad.log_alpha;
    analytic.segment(1 + dim, n_l) = Eigen::Map<const Vector>(grad.lower.data(), n_l);
    analytic.tail(m * dim) =
        Eigen::Map<const Vector>(grad.inducing.data(), m * dim);
    EXPECT_LE(oracles::max_rel_err(analytic, fd), 1e-5) << "rep " << rep;
  }
}

}  // namespace
}  // namespace gwi
