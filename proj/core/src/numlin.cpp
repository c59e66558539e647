#include "stocheq/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "stocheq/errors.hpp"

namespace stocheq {

double Tolerance::subspace_angle() const { return std::sqrt(rank_rel); }

void Tolerance::validate() const {
  if (!(rank_rel > 0.0) || !(eq_abs > 0.0) || !(eq_rel > 0.0) ||
      !(cluster_rel > 0.0)) {
    throw std::invalid_argument("Tolerance: all thresholds must be positive");
  }
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) +
                                " contains non-finite entries");
  }
}

Subspace::Subspace(Index ambient_dim)
    : ambient_dim_(ambient_dim), basis_(ambient_dim, 0) {
  if (ambient_dim < 0) {
    throw DimensionError("Subspace: negative ambient dimension");
  }
}

Subspace Subspace::from_orthonormal(Matrix basis) {
  Subspace s(basis.rows());
  s.basis_ = std::move(basis);
  return s;
}

Subspace Subspace::full(Index ambient_dim) {
  return from_orthonormal(Matrix::Identity(ambient_dim, ambient_dim));
}

Matrix Subspace::projector() const { return basis_ * basis_.transpose(); }

namespace {

void require_same_ambient(const Subspace& u, const Subspace& v,
                          std::string_view op) {
  if (u.ambient_dim() != v.ambient_dim()) {
    throw DimensionError(std::string(op) + ": ambient dimensions differ (" +
                         std::to_string(u.ambient_dim()) + " vs " +
                         std::to_string(v.ambient_dim()) + ")");
  }
}

Index truncated_rank(const Vector& sigma, Index rows, Index cols,
                     const Tolerance& tol) {
  if (sigma.size() == 0) return 0;
  const double smax = sigma(0);
  if (smax == 0.0) return 0;
  const double threshold =
      tol.rank_rel * static_cast<double>(std::max(rows, cols)) * smax;
  Index r = 0;
  while (r < sigma.size() && sigma(r) > threshold) ++r;
  return r;
}

// Orthonormal basis for the column span of a matrix known to have full
// column rank.
Matrix orthonormal_columns(const Matrix& x) {
  if (x.cols() == 0) return Matrix(x.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU);
  return svd.matrixU();
}

}  // namespace

RankKernel rank_and_kernel(const Matrix& m, const Tolerance& tol) {
  require_finite(m, "rank_and_kernel input");
  const Index cols = m.cols();
  if (m.rows() == 0 || cols == 0) {
    return {0, Subspace::full(cols)};
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Index r = truncated_rank(svd.singularValues(), m.rows(), cols, tol);
  Matrix k = svd.matrixV().rightCols(cols - r);
  return {r, Subspace::from_orthonormal(std::move(k))};
}

Index rank(const Matrix& m, const Tolerance& tol) {
  require_finite(m, "rank input");
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return truncated_rank(svd.singularValues(), m.rows(), m.cols(), tol);
}

Subspace kernel(const Matrix& m, const Tolerance& tol) {
  return rank_and_kernel(m, tol).kernel;
}

Subspace image(const Matrix& m, const Tolerance& tol) {
  require_finite(m, "image input");
  if (m.rows() == 0 || m.cols() == 0) return Subspace(m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const Index r = truncated_rank(svd.singularValues(), m.rows(), m.cols(), tol);
  return Subspace::from_orthonormal(svd.matrixU().leftCols(r));
}

Subspace intersect(const Subspace& u, const Subspace& v, const Tolerance& tol) {
  require_same_ambient(u, v, "intersect");
  if (u.is_zero() || v.is_zero()) return Subspace(u.ambient_dim());
  Matrix stacked(u.ambient_dim(), u.dim() + v.dim());
  stacked << u.basis(), -v.basis();
  const Subspace k = kernel(stacked, tol);
  if (k.is_zero()) return Subspace(u.ambient_dim());
  // Each kernel vector (a, b) has U a = V b; average both representations.
  const Matrix from_u = u.basis() * k.basis().topRows(u.dim());
  const Matrix from_v = v.basis() * k.basis().bottomRows(v.dim());
  return Subspace::from_orthonormal(orthonormal_columns(0.5 * (from_u + from_v)));
}

Subspace sum(const Subspace& u, const Subspace& v, const Tolerance& tol) {
  require_same_ambient(u, v, "sum");
  Matrix joined(u.ambient_dim(), u.dim() + v.dim());
  joined << u.basis(), v.basis();
  return image(joined, tol);
}

double containment_residual(const Subspace& u, const Subspace& v) {
  require_same_ambient(u, v, "is_contained");
  if (u.is_zero()) return 0.0;
  const Matrix outside =
      u.basis() - v.basis() * (v.basis().transpose() * u.basis());
  Eigen::JacobiSVD<Matrix> svd(outside);
  return svd.singularValues()(0);
}

bool is_contained(const Subspace& u, const Subspace& v, const Tolerance& tol) {
  if (u.dim() > v.dim()) {
    require_same_ambient(u, v, "is_contained");
    return false;
  }
  return containment_residual(u, v) <= tol.subspace_angle();
}

bool subspaces_equal(const Subspace& u, const Subspace& v,
                     const Tolerance& tol) {
  require_same_ambient(u, v, "subspaces_equal");
  return u.dim() == v.dim() && is_contained(u, v, tol) &&
         is_contained(v, u, tol);
}

double invariance_residual(const Matrix& a, const Subspace& u) {
  if (a.rows() != a.cols() || a.rows() != u.ambient_dim()) {
    throw DimensionError("is_invariant: A must be square with size " +
                         std::to_string(u.ambient_dim()));
  }
  require_finite(a, "is_invariant matrix");
  if (u.is_zero() || u.is_full()) return 0.0;
  const Matrix au = a * u.basis();
  const Matrix outside = au - u.basis() * (u.basis().transpose() * au);
  Eigen::JacobiSVD<Matrix> svd_a(a);
  const double norm_a = svd_a.singularValues()(0);
  if (norm_a == 0.0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(outside);
  return svd.singularValues()(0) / norm_a;
}

bool is_invariant(const Matrix& a, const Subspace& u, const Tolerance& tol) {
  return invariance_residual(a, u) <= tol.subspace_angle();
}

Subspace orthogonal_complement(const Subspace& u) {
  const Index n = u.ambient_dim();
  if (u.is_zero()) return Subspace::full(n);
  if (u.is_full()) return Subspace(n);
  Eigen::JacobiSVD<Matrix> svd(u.basis(), Eigen::ComputeFullU);
  return Subspace::from_orthonormal(svd.matrixU().rightCols(n - u.dim()));
}

EqualityResult matrices_equal(const Matrix& m1, const Matrix& m2,
                              const Tolerance& tol) {
  if (m1.rows() != m2.rows() || m1.cols() != m2.cols()) {
    throw DimensionError("matrices_equal: shape mismatch (" +
                         std::to_string(m1.rows()) + "x" +
                         std::to_string(m1.cols()) + " vs " +
                         std::to_string(m2.rows()) + "x" +
                         std::to_string(m2.cols()) + ")");
  }
  EqualityResult r;
  r.residual = (m1 - m2).norm();
  r.threshold = tol.eq_abs + tol.eq_rel * std::max(m1.norm(), m2.norm());
  r.equal = r.residual <= r.threshold;
  return r;
}

Matrix pseudo_inverse(const Matrix& m, const Tolerance& tol) {
  require_finite(m, "pseudo_inverse input");
  if (m.rows() == 0 || m.cols() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index r = truncated_rank(s, m.rows(), m.cols(), tol);
  const Vector inv = s.head(r).cwiseInverse();
  return svd.matrixV().leftCols(r) * inv.asDiagonal() *
         svd.matrixU().leftCols(r).transpose();
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("spectral_radius: matrix must be square");
  }
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigenvalue iteration failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace stocheq
