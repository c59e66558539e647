#pragma once

// Shared fixtures, random generators and independent oracles for the tests.

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "stocheq/stocheq.hpp"

namespace stocheq::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(STOCHEQ_FIXTURE_DIR) / name;
}

inline StochasticLinearSystem load_system_fixture(const std::string& name) {
  return load_system(fixture(name));
}

inline LinearRelation load_relation_fixture(const std::string& name) {
  return load_relation(fixture(name));
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r == 0 ? 0 : static_cast<Index>(rows.begin()->size());
  Matrix m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Subspace span(const Matrix& columns) { return image(columns); }

/// Column space keeping singular values above rel * scale, so a product
/// that vanishes up to rounding gives the zero subspace.
inline Subspace image_at_scale(const Matrix& m, double scale,
                               double rel = 1e-9) {
  if (m.cols() == 0) return Subspace::zero(m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) r += sv(i) > rel * scale ? 1 : 0;
  return Subspace::from_orthonormal(svd.matrixU().leftCols(r));
}

inline Vector unit(Index n, Index i) { return Vector::Unit(n, i); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  Index integer(Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(engine_);
  }
  bool coin() { return integer(0, 1) == 1; }

  Matrix gaussian(Index r, Index c) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }

  Matrix orthogonal(Index n) {
    if (n == 0) return Matrix(0, 0);
    Eigen::HouseholderQR<Matrix> qr(gaussian(n, n));
    return qr.householderQ() * Matrix::Identity(n, n);
  }

  /// Q1 diag(s) Q2 with s in [0.5, 2]: condition number at most 4.
  Matrix well_conditioned(Index n) {
    Vector s(n);
    for (Index i = 0; i < n; ++i) s(i) = uniform(0.5, 2.0);
    return orthogonal(n) * s.asDiagonal() * orthogonal(n);
  }

  /// Random matrix with spectral radius exactly `radius`.
  Matrix with_radius(Index n, double radius) {
    if (n == 0) return Matrix(0, 0);
    Matrix a = gaussian(n, n);
    const double rho = spectral_radius(a);
    return rho > 0.0 ? Matrix(a * (radius / rho)) : a;
  }

  /// Subspace of dimension k in R^n.
  Subspace subspace(Index n, Index k) {
    return Subspace::from_orthonormal(orthogonal(n).leftCols(k));
  }

  StochasticLinearSystem system(Index n, Index m, Index l, Index p,
                                double radius) {
    Matrix psi_factor = gaussian(p, p);
    return make_system(with_radius(n, radius), gaussian(n, m), gaussian(p, n),
                       gaussian(n, l), gaussian(l, 1).col(0),
                       psi_factor * psi_factor.transpose());
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// s2 = T s1 in the sense x2 = T x1.
inline StochasticLinearSystem similar(const StochasticLinearSystem& s,
                                      const Matrix& t) {
  const Matrix ti = t.inverse();
  return make_system(t * s.A * ti, t * s.B, s.C * ti, t * s.G, s.mu, s.Psi);
}

/// System with a known invariant unobservable block: in z = S^-1 x,
///   A = [A11 0; A21 A22], G = [G1; G2], C = [C1 0],
/// with G1 of reduced rank. When `bisim_valid` the block is also unreachable
/// (A21 = 0, G2 = 0), so its directions avoid im(Reach(A, G)).
struct StructuredCase {
  StochasticLinearSystem sys;
  Index hidden = 0;
  Matrix r_ext;  ///< kernel = hidden directions
  bool bisim_valid = false;
};

inline StructuredCase structured_case(Rng& rng, Index max_n = 6) {
  StructuredCase out;
  const Index n = rng.integer(1, max_n);
  const Index k = rng.integer(0, n - 1);
  const Index r = n - k;
  const Index l = rng.integer(1, n);
  const Index p = rng.integer(1, 2);
  const Index m = rng.integer(1, 2);
  out.hidden = k;
  out.bisim_valid = rng.coin();

  Matrix a = Matrix::Zero(n, n);
  a.topLeftCorner(r, r) = rng.with_radius(r, rng.uniform(0.3, 1.5));
  a.bottomRightCorner(k, k) = rng.with_radius(k, rng.uniform(0.3, 1.5));
  if (!out.bisim_valid) a.bottomLeftCorner(k, r) = rng.gaussian(k, r);
  const Index q = rng.integer(1, std::min(r, l));
  Matrix g = Matrix::Zero(n, l);
  g.topRows(r) = rng.gaussian(r, q) * rng.gaussian(q, l);
  if (!out.bisim_valid) g.bottomRows(k) = rng.gaussian(k, l);
  Matrix c = Matrix::Zero(p, n);
  c.leftCols(r) = rng.gaussian(p, r);

  const Matrix s = rng.well_conditioned(n);
  const Matrix si = s.inverse();
  const Matrix psi_factor = rng.gaussian(p, p);
  out.sys = make_system(s * a * si, s * rng.gaussian(n, m), c * si, s * g,
                        rng.gaussian(l, 1).col(0),
                        psi_factor * psi_factor.transpose());
  // Rows of a random mix of the z1 coordinates.
  out.r_ext = rng.well_conditioned(r) * si.topRows(r);
  return out;
}

/// Kernel of the real polynomial prod (A - lambda I) over a conjugate-closed
/// cluster: the generalized eigenspace computed without any Schur form.
inline Subspace eigenspace_by_kernel(const Matrix& a,
                                     const EigenvalueCluster& cluster) {
  const Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  Matrix poly = id;
  double bound = 1.0;
  std::vector<bool> used(cluster.size(), false);
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const std::complex<double> lam = cluster[i];
    Matrix factor;
    double term_norm = 0.0;
    if (std::abs(lam.imag()) > 1e-12) {
      for (std::size_t j = i + 1; j < cluster.size(); ++j) {
        if (!used[j] && std::abs(cluster[j] - std::conj(lam)) < 1e-6) {
          used[j] = true;
          break;
        }
      }
      factor = a * a - 2.0 * lam.real() * a + std::norm(lam) * id;
      term_norm = (a * a).norm() + 2.0 * std::abs(lam.real()) * a.norm() +
                  std::norm(lam) * id.norm();
    } else {
      factor = a - lam.real() * id;
      term_norm = a.norm() + std::abs(lam.real()) * id.norm();
    }
    // One factor per listed eigenvalue covers the algebraic multiplicity.
    poly = poly * factor;
    bound *= term_norm;
  }
  // Rank decision against the norms of the factors' terms, so a polynomial
  // that vanishes up to rounding gives the whole space.
  Eigen::JacobiSVD<Matrix> svd(poly, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) r += sv(i) > 1e-8 * bound ? 1 : 0;
  return image(svd.matrixV().rightCols(n - r));
}

/// Dimension of the kernel from an explicit SVD count, independent of the
/// library's rank rule.
inline Index svd_rank(const Matrix& m, double rel = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double cut = rel * static_cast<double>(std::max(m.rows(), m.cols())) *
                     s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) r += s(i) > cut ? 1 : 0;
  return r;
}

/// Direct double sum for cov(x(t), x(t)) = sum_h A^h G G^T A^h^T.
inline Matrix state_cov_by_sum(const StochasticLinearSystem& s, Index t) {
  Matrix p = Matrix::Zero(s.n(), s.n());
  Matrix ah = Matrix::Identity(s.n(), s.n());
  for (Index h = 0; h < t; ++h) {
    p += ah * s.G * s.G.transpose() * ah.transpose();
    ah = s.A * ah;
  }
  return p;
}

/// Stationary covariance from the Kronecker form (I - A (x) A) vec P = vec GG^T.
inline Matrix stationary_by_kronecker(const StochasticLinearSystem& s) {
  const Index n = s.n();
  Matrix k = Matrix::Identity(n * n, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      k.block(i * n, j * n, n, n) -= s.A(i, j) * s.A;
  const Matrix q = s.G * s.G.transpose();
  const Vector vq = Eigen::Map<const Vector>(q.data(), n * n);
  const Vector vp = k.partialPivLu().solve(vq);
  return Eigen::Map<const Matrix>(vp.data(), n, n);
}

}  // namespace stocheq::testing
