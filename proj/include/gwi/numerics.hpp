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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "gwi/diagnostics.hpp"
#include "gwi/errors.hpp"

namespace gwi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline bool is_square(const Matrix& a) { return a.rows() == a.cols(); }

inline void require_symmetric(const Matrix& a, double tol = 1e-10) {
  if (!is_square(a)) throw DimensionMismatch("matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * scale) {
    std::ostringstream os;
    os << "matrix is not symmetric: max |A - A^T| = " << asym;
    throw InvalidArgument(os.str());
  }
}

// ---------------------------------------------------------------------------
// Cholesky with escalating jitter
// ---------------------------------------------------------------------------

struct JitteredChol {
  Matrix lower;
  double jitter = 0.0;  // value actually added to the diagonal
};

// Attempts jitter 0, then 1e-10 * mean(diag) escalating by 10x up to
// 1e-4 * mean(diag).
inline JitteredChol cholesky_jittered(const Matrix& a) {
  require_symmetric(a);
  const Index n = a.rows();
  const double base = std::abs(a.diagonal().mean());
  std::vector<double> jitters = {0.0};
  if (base > 0.0) {
    for (double j = 1e-10 * base; j <= 1e-4 * base * (1.0 + 1e-12); j *= 10.0)
      jitters.push_back(j);
  }
  for (double jitter : jitters) {
    Matrix candidate = a;
    candidate.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(candidate);
    if (llt.info() == Eigen::Success) {
      return {Matrix(llt.matrixL()), jitter};
    }
  }
  std::ostringstream os;
  os << "matrix of size " << n << " is not positive definite (max jitter "
     << (base > 0 ? 1e-4 * base : 0.0) << " exhausted)";
  throw NotPositiveDefinite(os.str());
}

inline Matrix cholesky(const Matrix& a) { return cholesky_jittered(a).lower; }

// Solves (L L^T) X = B given the lower factor L.
inline Matrix chol_solve(const Matrix& lower, const Matrix& b) {
  if (lower.rows() != b.rows())
    throw DimensionMismatch("chol_solve: row counts differ");
  Matrix x = lower.triangularView<Eigen::Lower>().solve(b);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

inline Matrix solve_psd(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw DimensionMismatch("solve_psd: row counts differ");
  return chol_solve(cholesky(a), b);
}

inline Vector solve_psd(const Matrix& a, const Vector& b) {
  return Vector(solve_psd(a, Matrix(b)));
}

// ---------------------------------------------------------------------------
// Eigendecompositions
// ---------------------------------------------------------------------------

struct SymEig {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns match eigenvalues
};

inline SymEig sym_eig(const Matrix& a) {
  require_symmetric(a);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("symmetric eigensolver did not converge");
  const Index n = a.rows();
  SymEig out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  (void)n;
  return out;
}

// Real parts of the eigenvalues of a (possibly nonsymmetric) square matrix,
// sorted descending. Imaginary residue above 1e-6 * ||M|| is reported as a
// warning; the cross-Gram products this is used on are similar to PSD
// matrices, so large imaginary parts indicate an upstream problem.
inline Vector eig_real_parts(const Matrix& m) {
  if (!is_square(m)) throw DimensionMismatch("eig_real_parts: not square");
  if (!m.allFinite()) throw InvalidArgument("eig_real_parts: non-finite entries");
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("nonsymmetric eigensolver did not converge");
  const Eigen::VectorXcd values = solver.eigenvalues();
  const double norm = m.norm();
  const double max_imag = values.imag().cwiseAbs().maxCoeff();
  if (max_imag > 1e-6 * std::max(norm, 1e-300)) {
    std::ostringstream os;
    os << "eig_real_parts: imaginary residue " << max_imag << " exceeds 1e-6*||M|| ("
       << 1e-6 * norm << ")";
    diag::warn(os.str());
  }
  Vector real = values.real();
  std::sort(real.data(), real.data() + real.size(), std::greater<double>());
  return real;
}

// Symmetric PSD square root via eigendecomposition; negative eigenvalues are
// clamped to zero (tolerated down to -1e-10 relative before warning).
inline Matrix psd_sqrt(const Matrix& a) {
  SymEig eig = sym_eig(a);
  const double lead = eig.eigenvalues.size() > 0 ? eig.eigenvalues(0) : 0.0;
  const double tol = 1e-10 * std::max(1.0, std::abs(lead));
  Vector roots(eig.eigenvalues.size());
  for (Index i = 0; i < roots.size(); ++i) {
    double lambda = eig.eigenvalues(i);
    if (lambda < -tol) {
      std::ostringstream os;
      os << "psd_sqrt: clamping eigenvalue " << lambda << " to zero";
      diag::warn(os.str());
    }
    roots(i) = std::sqrt(std::max(lambda, 0.0));
  }
  return eig.eigenvectors * roots.asDiagonal() * eig.eigenvectors.transpose();
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature (physicists' convention, weight exp(-t^2))
// ---------------------------------------------------------------------------

struct QuadratureRule {
  Vector nodes;
  Vector weights;
  Index order() const { return nodes.size(); }
};

// Golub-Welsch on the Jacobi matrix of the Hermite recurrence. Nodes and
// weights are symmetrized so the +-pairs are exact negations.
inline QuadratureRule gauss_hermite(Index order) {
  require(order >= 1 && order <= 100, "gauss_hermite: order must be in [1, 100]");
  const double mu0 = std::sqrt(M_PI);  // integral of exp(-t^2)
  if (order == 1) {
    QuadratureRule rule;
    rule.nodes = Vector::Zero(1);
    rule.weights = Vector::Constant(1, mu0);
    return rule;
  }
  Vector diagonal = Vector::Zero(order);
  Vector subdiagonal(order - 1);
  for (Index i = 1; i < order; ++i) subdiagonal(i - 1) = std::sqrt(0.5 * i);
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diagonal, subdiagonal);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("gauss_hermite: tridiagonal eigensolver failed");
  QuadratureRule rule;
  rule.nodes = solver.eigenvalues();  // ascending
  rule.weights = mu0 * solver.eigenvectors().row(0).transpose().array().square();
  for (Index i = 0; i < order / 2; ++i) {
    const Index j = order - 1 - i;
    const double x = 0.5 * (rule.nodes(j) - rule.nodes(i));
    rule.nodes(i) = -x;
    rule.nodes(j) = x;
    const double w = 0.5 * (rule.weights(i) + rule.weights(j));
    rule.weights(i) = w;
    rule.weights(j) = w;
  }
  if (order % 2 == 1) rule.nodes(order / 2) = 0.0;
  return rule;
}

// Standard normal CDF via the complementary error function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// ---------------------------------------------------------------------------
// Seeded deterministic random generator
// ---------------------------------------------------------------------------

// Deterministic stream: identical seed + call sequence gives identical values.
// The uniform/normal transforms are written out so the stream does not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the second normal of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    require(n > 0, "uniform_int: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  std::vector<Index> permutation(Index n) {
    std::vector<Index> p(n);
    std::iota(p.begin(), p.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
      const Index j = static_cast<Index>(uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[i], p[j]);
    }
    return p;
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<Index> sample_without_replacement(Index n, Index k) {
    require(k >= 0 && k <= n, "sample_without_replacement: k out of range");
    std::vector<Index> pool(n);
    std::iota(pool.begin(), pool.end(), Index{0});
    std::vector<Index> out(k);
    for (Index i = 0; i < k; ++i) {
      const Index j = i + static_cast<Index>(uniform_int(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
      out[i] = pool[i];
    }
    return out;
  }

  // SplitMix64 mix of seed and salt; used to derive independent substreams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace gwi
