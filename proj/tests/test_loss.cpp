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
#include <memory>

#include "gwi/models.hpp"
#include "oracles.hpp"

namespace gwi {
namespace {

ArdParams random_ard(Index dim, Rng& rng) {
  ArdParams params;
  params.log_sigma_f = rng.uniform(-0.3, 0.3);
  params.log_alpha = Vector::Zero(dim);
  for (Index d = 0; d < dim; ++d) params.log_alpha(d) = rng.uniform(-0.3, 0.3);
  return params;
}

GaussianMeasureSpec ard_measure(const ArdParams& params, MeanFn mean = zero_mean()) {
  return {std::move(mean), std::make_shared<ArdKernel>(params)};
}

Matrix random_psd_from(Rng& rng, Index n, double ridge) {
  const Matrix m = rng.normal_matrix(n, n);
  return m * m.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n);
}

// --------------------------------------------------------------------------
// Expected log-likelihood
// --------------------------------------------------------------------------

TEST(ExpectedLoglik, StandardNormalAtZero) {
  const Vector zero = Vector::Zero(1);
  const double ell = expected_loglik_regression(zero, zero, zero, 1.0, 1, 1);
  EXPECT_NEAR(ell, -0.5 * std::log(2.0 * M_PI), 1e-12);
}

TEST(ExpectedLoglik, NoiseDoublingShiftsByHalfNLogTwo) {
  const Index n = 7;
  const Vector zero = Vector::Zero(n);
  const double a = expected_loglik_regression(zero, zero, zero, 1.0, n, n);
  const double b = expected_loglik_regression(zero, zero, zero, 2.0, n, n);
  EXPECT_NEAR(a - b, 0.5 * static_cast<double>(n) * std::log(2.0), 1e-12);
}

TEST(ExpectedLoglik, PermutationInvariant) {
  Rng rng(1);
  const Index n = 9;
  const Vector y = rng.normal_vector(n);
  const Vector mq = rng.normal_vector(n);
  const Vector rd = rng.normal_vector(n).cwiseAbs();
  const double base = expected_loglik_regression(y, mq, rd, 0.7, 20, n);
  const auto perm = rng.permutation(n);
  Vector y2(n), mq2(n), rd2(n);
  for (Index i = 0; i < n; ++i) {
    y2(i) = y(perm[static_cast<std::size_t>(i)]);
    mq2(i) = mq(perm[static_cast<std::size_t>(i)]);
    rd2(i) = rd(perm[static_cast<std::size_t>(i)]);
  }
  EXPECT_NEAR(expected_loglik_regression(y2, mq2, rd2, 0.7, 20, n), base, 1e-12);
}

TEST(ExpectedLoglik, RejectsNonPositiveNoise) {
  const Vector zero = Vector::Zero(1);
  EXPECT_THROW(expected_loglik_regression(zero, zero, zero, 0.0, 1, 1),
               NonPositiveNoise);
}

TEST(ExpectedLoglik, MatchesMonteCarloOracle) {
  Rng rng(2);
  for (int rep = 0; rep < 3; ++rep) {
    const Index n = 4;
    const Vector y = rng.normal_vector(n);
    const Vector mq = rng.normal_vector(n);
    const Vector rd = 0.5 * rng.normal_vector(n).cwiseAbs();
    const double noise2 = 0.3 + rng.uniform();
    const double analytic = expected_loglik_regression(y, mq, rd, noise2, n, n);
    const auto mc = oracles::mc_expected_loglik(mq, rd, y, noise2, 200000, 77 + rep);
    EXPECT_LE(std::abs(analytic - mc.value), 3.0 * mc.std_error + 1e-9);
  }
}

// --------------------------------------------------------------------------
// Empirical Wasserstein estimator and exact discrete oracle
// --------------------------------------------------------------------------

TEST(WassersteinHat, SelfDistanceIsZero) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 2 + static_cast<Index>(rng.uniform_int(48));
    const Index dim = 1 + static_cast<Index>(rng.uniform_int(3));
    const GaussianMeasureSpec p = ard_measure(random_ard(dim, rng));
    const Matrix x = rng.normal_matrix(n, dim);
    const WassersteinTerms w = wasserstein_hat(p, p, x, x, 0.0);
    EXPECT_LE(std::abs(w.value), 1e-8) << "rep " << rep;
  }
}

TEST(WassersteinHat, DegenerateZeroKernels) {
  class ZeroKernel final : public Kernel {
   public:
    Index dim() const override { return 1; }
    double eval(const Eigen::Ref<const Vector>&,
                const Eigen::Ref<const Vector>&) const override {
      return 0.0;
    }
  };
  const GaussianMeasureSpec p{zero_mean(), std::make_shared<ZeroKernel>()};
  const Matrix x = Matrix::Random(5, 1);
  const WassersteinTerms w = wasserstein_hat(p, p, x, x, 0.0);
  EXPECT_EQ(w.value, 0.0);
}

TEST(WassersteinHat, MatchesExactDiscreteW2OnFullBatch) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 3 + static_cast<Index>(rng.uniform_int(20));
    const Index dim = 1 + static_cast<Index>(rng.uniform_int(3));
    const ArdParams prior_params = random_ard(dim, rng);
    ArdParams var_params = random_ard(dim, rng);
    var_params.log_sigma_f += 0.4;  // make the pair clearly unequal
    Rng mean_rng(rng.next_u64());
    const double slope = mean_rng.uniform(-1.0, 1.0);
    const MeanFn mq = [slope](const Eigen::Ref<const Vector>& x) {
      return slope * x(0);
    };
    const GaussianMeasureSpec p = ard_measure(prior_params);
    const GaussianMeasureSpec q = ard_measure(var_params, mq);
    const Matrix x = rng.normal_matrix(n, dim);

    const WassersteinTerms w = wasserstein_hat(p, q, x, x, 0.0);
    const double exact = exact_discrete_w2(p.mean_at(x), q.mean_at(x),
                                           p.kernel->gram(x, x),
                                           q.kernel->gram(x, x), n);
    EXPECT_LE(std::abs(w.value - exact), 1e-6 * std::max(1.0, std::abs(exact)))
        << "rep " << rep;
  }
}

TEST(ExactDiscreteW2, IdenticalMeasuresGiveZero) {
  Rng rng(5);
  const Index n = 6;
  const Matrix k = random_psd_from(rng, n, 0.1);
  const Vector m = rng.normal_vector(n);
  EXPECT_NEAR(exact_discrete_w2(m, m, k, k, n), 0.0, 1e-9);
}

TEST(ExactDiscreteW2, ScalarCase) {
  // N=1: (dm)^2 + (sqrt(k) - sqrt(r))^2 with dm=1, k=1, r=4 -> 2
  Vector mp(1), mq(1);
  mp << 0.0;
  mq << 1.0;
  Matrix k(1, 1), r(1, 1);
  k << 1.0;
  r << 4.0;
  EXPECT_NEAR(exact_discrete_w2(mp, mq, k, r, 1), 2.0, 1e-12);
}

TEST(ExactDiscreteW2, CommutingDiagonalCase) {
  Vector m = Vector::Zero(2);
  Matrix k = Matrix::Zero(2, 2), r = Matrix::Zero(2, 2);
  k(0, 0) = 1.0;
  k(1, 1) = 4.0;
  r(0, 0) = 9.0;
  r(1, 1) = 16.0;
  EXPECT_NEAR(exact_discrete_w2(m, m, k, r, 2), 4.0, 1e-12);
}

TEST(ExactDiscreteW2, SymmetryAndTriangleInequality) {
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 5;
    const Vector m1 = rng.normal_vector(n);
    const Vector m2 = rng.normal_vector(n);
    const Vector m3 = rng.normal_vector(n);
    const Matrix c1 = random_psd_from(rng, n, 0.2);
    const Matrix c2 = random_psd_from(rng, n, 0.2);
    const Matrix c3 = random_psd_from(rng, n, 0.2);
    const double d12 = exact_discrete_w2(m1, m2, c1, c2, n);
    const double d21 = exact_discrete_w2(m2, m1, c2, c1, n);
    EXPECT_LE(std::abs(d12 - d21), 1e-8 * std::max(1.0, std::abs(d12)));
    const double w12 = std::sqrt(std::max(d12, 0.0));
    const double w13 = std::sqrt(std::max(exact_discrete_w2(m1, m3, c1, c3, n), 0.0));
    const double w32 = std::sqrt(std::max(exact_discrete_w2(m3, m2, c3, c2, n), 0.0));
    EXPECT_LE(w12, w13 + w32 + 1e-6);
  }
}

// --------------------------------------------------------------------------
// Regression loss assembly
// --------------------------------------------------------------------------

TEST(RegressionLoss, PerfectFitReducesToNormalizer) {
  // mQ = y, r = 0 (via variational = prior with zero kernels impossible; use
  // prior = variational so the W term vanishes and subtract the r contribution)
  Rng rng(7);
  const Index n = 10;
  const ArdParams params = random_ard(1, rng);
  const Matrix x = rng.normal_matrix(n, 1);
  const double slope = 0.3;
  const MeanFn mean = [slope](const Eigen::Ref<const Vector>& v) {
    return slope * v(0);
  };
  const GaussianMeasureSpec p = ard_measure(params, mean);
  const GaussianMeasureSpec q = ard_measure(params, mean);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = mean(x.row(i).transpose());
  const double noise2 = 0.5;
  LossConfig cfg;
  cfg.eigen_floor = 0.0;
  const LossBreakdown bd = regression_loss(p, q, x, y, n, x, noise2, cfg);
  // residuals vanish; r(x,x) = sigma_f^2 remains inside the ELL
  const double expected_ell =
      -0.5 * n * std::log(2.0 * M_PI * noise2) -
      n * params.sigma_f2() / (2.0 * noise2);
  EXPECT_NEAR(bd.ell, expected_ell, 1e-9);
  EXPECT_NEAR(bd.total, -expected_ell, 1e-7);  // W-hat(P,P) = 0
}

TEST(RegressionLoss, BreakdownIdentity) {
  Rng rng(8);
  const Index n = 12;
  const GaussianMeasureSpec p = ard_measure(random_ard(2, rng));
  ArdParams vp = random_ard(2, rng);
  const GaussianMeasureSpec q = ard_measure(vp, [](const Eigen::Ref<const Vector>& v) {
    return 0.2 * v(0) - 0.1 * v(1);
  });
  const Matrix x = rng.normal_matrix(n, 2);
  const Vector y = rng.normal_vector(n);
  LossConfig cfg;
  const LossBreakdown bd = regression_loss(p, q, x, y, 30, x, 0.4, cfg);
  EXPECT_NEAR(bd.total,
              -bd.ell + bd.mean_term + bd.trace_p + bd.trace_q - 2.0 * bd.cross_term,
              1e-12);
}

// --------------------------------------------------------------------------
// Gauss-Hermite argmax probability
// --------------------------------------------------------------------------

TEST(ClassProb, ExchangeableCaseIsUniform) {
  const QuadratureRule rule = gauss_hermite(64);
  for (Index j_count : {2, 3, 5}) {
    const Vector means = Vector::Zero(j_count);
    const Vector vars = Vector::Ones(j_count);
    for (Index j = 0; j < j_count; ++j)
      EXPECT_NEAR(class_prob_S(j, means, vars, rule),
                  1.0 / static_cast<double>(j_count), 1e-10);
  }
}

TEST(ClassProb, DominantMeanNearOne) {
  const QuadratureRule rule = gauss_hermite(32);
  Vector means(2), vars(2);
  means << 100.0, 0.0;
  vars << 1.0, 1.0;
  EXPECT_NEAR(class_prob_S(0, means, vars, rule), 1.0, 1e-8);
}

TEST(ClassProb, SumsToOneWithinQuadratureError) {
  Rng rng(9);
  const QuadratureRule rule = gauss_hermite(32);
  const QuadratureRule rule2 = gauss_hermite(64);
  for (int rep = 0; rep < 10; ++rep) {
    const Index j_count = 2 + static_cast<Index>(rng.uniform_int(4));
    const Vector means = rng.normal_vector(j_count);
    const Vector vars = (rng.normal_vector(j_count).array().abs() + 0.2).matrix();
    double sum = 0.0, sum2 = 0.0;
    for (Index j = 0; j < j_count; ++j) {
      sum += class_prob_S(j, means, vars, rule);
      sum2 += class_prob_S(j, means, vars, rule2);
    }
    const double quad_err = std::abs(sum - sum2);
    EXPECT_LE(std::abs(sum - 1.0), 10.0 * std::max(quad_err, 1e-12)) << "rep " << rep;
  }
}

TEST(ClassProb, MatchesMonteCarloOracle) {
  Rng rng(10);
  const QuadratureRule rule = gauss_hermite(32);
  for (int rep = 0; rep < 3; ++rep) {
    const Index j_count = 3;
    const Vector means = rng.normal_vector(j_count);
    const Vector vars = (rng.normal_vector(j_count).array().abs() + 0.3).matrix();
    const Index j = static_cast<Index>(rng.uniform_int(j_count));
    const double s = class_prob_S(j, means, vars, rule);
    const auto mc = oracles::mc_argmax_prob(means, vars, j, 200000, 400 + rep);
    EXPECT_LE(std::abs(s - mc.value), 3.0 * mc.std_error + 1e-6);
  }
}

TEST(ClassProb, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  const QuadratureRule rule = gauss_hermite(48);
  for (int rep = 0; rep < 5; ++rep) {
    const Index j_count = 2 + static_cast<Index>(rng.uniform_int(3));
    const Vector means = rng.normal_vector(j_count);
    const Vector vars = (rng.normal_vector(j_count).array().abs() + 0.3).matrix();
    const Index j = static_cast<Index>(rng.uniform_int(j_count));
    const ClassProb p = class_prob_with_grad(j, means, vars, rule);

    Vector theta(2 * j_count);
    theta.head(j_count) = means;
    theta.tail(j_count) = vars;
    const auto value = [&](const Vector& t) {
      return class_prob_S(j, t.head(j_count), t.tail(j_count), rule);
    };
    const Vector fd = oracles::fd_gradient(value, theta, 1e-6);
    Vector analytic(2 * j_count);
    analytic.head(j_count) = p.d_mean;
    analytic.tail(j_count) = p.d_var;
    EXPECT_LE(oracles::max_rel_err(analytic, fd), 2e-4) << "rep " << rep;
  }
}

// --------------------------------------------------------------------------
// Classification ELL and loss
// --------------------------------------------------------------------------

TEST(ClassificationEll, CertainCorrect) {
  const Index n = 8;
  const double eps = 0.01;
  const double ell = classification_ell(Vector::Ones(n), eps, 3, n, n);
  EXPECT_NEAR(ell, n * std::log(1.0 - eps), 1e-12);
}

TEST(ClassificationEll, CertainWrong) {
  const Index n = 8;
  const double eps = 0.01;
  const double ell = classification_ell(Vector::Zero(n), eps, 3, n, n);
  EXPECT_NEAR(ell, n * std::log(eps / 2.0), 1e-12);
}

TEST(ClassificationEll, UniformTwoClass) {
  const Index n = 5;
  const double eps = 0.01;
  const double ell = classification_ell(Vector::Constant(n, 0.5), eps, 2, n, n);
  EXPECT_NEAR(ell, n * 0.5 * (std::log(0.99) + std::log(0.01)), 1e-12);
}

TEST(ClassificationLoss, EqualPairsReduceToEll) {
  Rng rng(12);
  const Index n = 10;
  const Index j_count = 3;
  const ArdParams params = random_ard(2, rng);
  std::vector<GaussianMeasureSpec> priors, vars;
  for (Index j = 0; j < j_count; ++j) {
    priors.push_back(ard_measure(params));
    vars.push_back(ard_measure(params));
  }
  const Matrix x = rng.normal_matrix(n, 2);
  std::vector<int> labels(n);
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % j_count;
  LossConfig cfg;
  cfg.eigen_floor = 0.0;
  const LossBreakdown bd = classification_loss(priors, vars, x, labels, n, x, cfg);
  EXPECT_LE(std::abs(bd.total - (-bd.ell)), 1e-7);
  EXPECT_NEAR(bd.total,
              -bd.ell + bd.mean_term + bd.trace_p + bd.trace_q - 2.0 * bd.cross_term,
              1e-12);
}

// --------------------------------------------------------------------------
// Analytic gradients of the assembled losses (finite-difference oracle)
// --------------------------------------------------------------------------

RegressionModel random_regression_model(MeanVariant variant, Index dim, Index m,
                                        Rng& rng, bool train_noise = false) {
  const ArdParams prior = random_ard(dim, rng);
  const Matrix z = 1.5 * rng.normal_matrix(m, dim);
  Matrix lower = 0.25 * rng.normal_matrix(m, m);
  lower.triangularView<Eigen::StrictlyUpper>().setZero();
  lower.diagonal().array() = lower.diagonal().array().abs() + 0.3;
  const double noise2 = 0.2 + 0.3 * rng.uniform();
  if (variant == MeanVariant::kSvgp) {
    RegressionModel model(prior, noise2, z, lower, 0.5 * rng.normal_vector(m),
                          /*train_inducing=*/true);
    model.set_train_noise(train_noise);
    return model;
  }
  RegressionModel model(prior, noise2, z, lower, mlp_init({dim, 5, 5, 1}, rng));
  model.set_train_noise(train_noise);
  return model;
}

TEST(LossGradient, MeanTermBetaChainRule) {
  // d mean_term / d beta_m = -(2/N_B) sum_b (m_P - m_Q) k_m(x_b)
  Rng rng(13);
  RegressionModel model = random_regression_model(MeanVariant::kSvgp, 2, 3, rng);
  const Index n = 8;
  const Matrix x = rng.normal_matrix(n, 2);
  const Vector y = rng.normal_vector(n);
  LossConfig cfg;
  cfg.eigen_floor = 1e-10;

  ParamVector flat = model.pack();
  const auto mean_term_only = [&](const Vector& v) {
    ParamVector p = flat;
    p.values = v;
    RegressionModel copy = model;
    copy.unpack(p);
    const Vector mq = copy.mean_at(x);
    return mq.squaredNorm() / static_cast<double>(n);
  };
  const Vector fd = oracles::fd_gradient(mean_term_only, flat.values, 1e-5);

  const Vector mq = model.mean_at(x);
  const Matrix v_b = model.kernel().cross(x);
  const Vector expected = v_b * ((2.0 / n) * mq);
  const ParamSegment& seg = flat.segments[flat.segment_index("beta")];
  for (Index i = 0; i < seg.size(); ++i)
    EXPECT_NEAR(expected(i), fd(seg.offset + i), 1e-6);
}

TEST(LossGradient, ZeroDirectionGivesZeroDerivative) {
  Rng rng(14);
  RegressionModel model = random_regression_model(MeanVariant::kMlp, 2, 3, rng);
  const Matrix x = rng.normal_matrix(10, 2);
  const Vector y = rng.normal_vector(10);
  LossConfig cfg;
  const auto [bd, grad] = model.loss_and_gradient(x, y, 10, x, cfg);
  EXPECT_EQ(grad.values.dot(Vector::Zero(grad.size())), 0.0);
}

void check_regression_gradient(MeanVariant variant, std::uint64_t seed,
                               bool train_noise) {
  Rng rng(seed);
  RegressionModel model =
      random_regression_model(variant, 2, 3, rng, train_noise);
  const Index n = 12;
  const Index n_sub = 6;
  const Matrix x = rng.normal_matrix(n, 2);
  const Vector y = rng.normal_vector(n);
  const Matrix x_sub = x.topRows(n_sub);
  LossConfig cfg;
  cfg.eigen_floor = 1e-10;

  const auto [bd, grad] = model.loss_and_gradient(x, y, 20, x_sub, cfg);
  ParamVector flat = model.pack();
  const auto value = [&](const Vector& v) {
    ParamVector p = flat;
    p.values = v;
    RegressionModel copy = model;
    copy.unpack(p);
    return copy.loss(x, y, 20, x_sub, cfg).total;
  };
  const Vector fd = oracles::fd_gradient(value, flat.values, 1e-5);
  EXPECT_LE(oracles::max_rel_err(grad.values, fd), 1e-4) << "seed " << seed;
}

TEST(LossGradient, SvgpFullLossMatchesFiniteDifferences) {
  for (std::uint64_t seed : {21, 22, 23, 24, 25})
    check_regression_gradient(MeanVariant::kSvgp, seed, false);
}

TEST(LossGradient, MlpFullLossMatchesFiniteDifferences) {
  for (std::uint64_t seed : {31, 32, 33, 34, 35})
    check_regression_gradient(MeanVariant::kMlp, seed, false);
}

TEST(LossGradient, TrainableNoiseMatchesFiniteDifferences) {
  check_regression_gradient(MeanVariant::kMlp, 41, true);
  check_regression_gradient(MeanVariant::kSvgp, 42, true);
}

ClassificationModel random_classification_model(Index j_count, Index dim, Index m,
                                                Rng& rng) {
  const ArdParams prior = random_ard(dim, rng);
  const Matrix z = 1.5 * rng.normal_matrix(m, dim);
  std::vector<Matrix> lowers;
  for (Index j = 0; j < j_count; ++j) {
    Matrix lower = 0.25 * rng.normal_matrix(m, m);
    lower.triangularView<Eigen::StrictlyUpper>().setZero();
    lower.diagonal().array() = lower.diagonal().array().abs() + 0.3;
    lowers.push_back(lower);
  }
  return ClassificationModel(prior, z, lowers, mlp_init({dim, 5, j_count}, rng));
}

TEST(LossGradient, ClassificationMatchesFiniteDifferences) {
  for (std::uint64_t seed : {51, 52, 53, 54, 55}) {
    Rng rng(seed);
    const Index j_count = 3;
    ClassificationModel model = random_classification_model(j_count, 2, 3, rng);
    const Index n = 30;
    const Matrix x = rng.normal_matrix(n, 2);
    std::vector<int> labels(n);
    for (Index i = 0; i < n; ++i)
      labels[static_cast<std::size_t>(i)] =
          static_cast<int>(rng.uniform_int(j_count));
    const Matrix x_sub = x.topRows(8);
    LossConfig cfg;
    cfg.eigen_floor = 1e-10;
    cfg.quad_order = 32;

    const auto [bd, grad] = model.loss_and_gradient(x, labels, n, x_sub, cfg);
    ParamVector flat = model.pack();
    const auto value = [&](const Vector& v) {
      ParamVector p = flat;
      p.values = v;
      ClassificationModel copy = model;
      copy.unpack(p);
      return copy.loss(x, labels, n, x_sub, cfg).total;
    };
    const Vector fd = oracles::fd_gradient(value, flat.values, 1e-5);
    EXPECT_LE(oracles::max_rel_err(grad.values, fd), 1e-4) << "seed " << seed;
  }
}

TEST(LossGradient, MeasureLevelAndModelLevelAgree) {
  Rng rng(60);
  RegressionModel model = random_regression_model(MeanVariant::kMlp, 2, 4, rng);
  const Index n = 15;
  const Matrix x = rng.normal_matrix(n, 2);
  const Vector y = rng.normal_vector(n);
  const Matrix x_sub = x.topRows(7);
  LossConfig cfg;
  const LossBreakdown direct = model.loss(x, y, 25, x_sub, cfg);
  const LossBreakdown generic =
      regression_loss(model.prior_measure(), model.variational_measure(), x, y, 25,
                      x_sub, model.noise2(), cfg);
  EXPECT_NEAR(direct.total, generic.total, 1e-8 * std::max(1.0, std::abs(generic.total)));
  EXPECT_NEAR(direct.ell, generic.ell, 1e-8 * std::max(1.0, std::abs(generic.ell)));
  EXPECT_NEAR(direct.cross_term, generic.cross_term,
              1e-8 * std::max(1.0, std::abs(generic.cross_term)));
}

}  // namespace
}  // namespace gwi
