#pragma once

// Tolerance-aware dense linear algebra and subspace arithmetic.
//
// Every rank decision in the library goes through rank_and_kernel(): a
// singular value sigma_j counts iff sigma_j > rank_rel * max(rows, cols) *
// sigma_max. Subspaces carry orthonormal bases; the zero subspace is a basis
// with zero columns that still remembers its ambient dimension.

#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace stocheq {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Tolerance {
  /// Relative singular-value threshold for rank decisions.
  double rank_rel = 1e-10;
  /// Absolute part of the matrix-equality threshold.
  double eq_abs = 1e-9;
  /// Relative part of the matrix-equality threshold.
  double eq_rel = 1e-9;
  /// Eigenvalues closer than cluster_rel * (1 + |lambda|) share a cluster.
  double cluster_rel = 1e-8;

  /// Threshold on sin(largest principal angle) used by containment and
  /// invariance tests.
  [[nodiscard]] double subspace_angle() const;

  /// Throws std::invalid_argument unless every threshold is positive.
  void validate() const;
};

/// Throws std::invalid_argument naming `what` if any entry is NaN or Inf.
void require_finite(const Matrix& m, std::string_view what);

class Subspace {
 public:
  /// The zero subspace of R^ambient_dim.
  explicit Subspace(Index ambient_dim = 0);

  /// Wraps a basis whose columns are already orthonormal.
  static Subspace from_orthonormal(Matrix basis);
  static Subspace full(Index ambient_dim);
  static Subspace zero(Index ambient_dim) { return Subspace(ambient_dim); }

  [[nodiscard]] Index ambient_dim() const { return ambient_dim_; }
  [[nodiscard]] Index dim() const { return basis_.cols(); }
  [[nodiscard]] const Matrix& basis() const { return basis_; }
  [[nodiscard]] bool is_zero() const { return dim() == 0; }
  [[nodiscard]] bool is_full() const { return dim() == ambient_dim_; }

  /// Orthogonal projector basis * basis^T.
  [[nodiscard]] Matrix projector() const;

 private:
  Index ambient_dim_ = 0;
  Matrix basis_;
};

struct RankKernel {
  Index rank = 0;
  Subspace kernel;
};

RankKernel rank_and_kernel(const Matrix& m, const Tolerance& tol = {});
Index rank(const Matrix& m, const Tolerance& tol = {});
Subspace kernel(const Matrix& m, const Tolerance& tol = {});
Subspace image(const Matrix& m, const Tolerance& tol = {});

Subspace intersect(const Subspace& u, const Subspace& v,
                   const Tolerance& tol = {});
Subspace sum(const Subspace& u, const Subspace& v, const Tolerance& tol = {});

/// sin of the largest principal angle between u and its projection onto v
/// (0 when u is inside v).
double containment_residual(const Subspace& u, const Subspace& v);
bool is_contained(const Subspace& u, const Subspace& v,
                  const Tolerance& tol = {});
bool subspaces_equal(const Subspace& u, const Subspace& v,
                     const Tolerance& tol = {});

/// ||(I - UU^T) A U||_2 / max(||A||_2, 1e-300): backward error of U as an
/// invariant subspace of A.
double invariance_residual(const Matrix& a, const Subspace& u);
bool is_invariant(const Matrix& a, const Subspace& u,
                  const Tolerance& tol = {});

/// Orthogonal complement of u in its ambient space.
Subspace orthogonal_complement(const Subspace& u);

struct EqualityResult {
  bool equal = false;
  double residual = 0.0;   ///< ||M1 - M2||_F
  double threshold = 0.0;  ///< eq_abs + eq_rel * max(||M1||_F, ||M2||_F)
};

EqualityResult matrices_equal(const Matrix& m1, const Matrix& m2,
                              const Tolerance& tol = {});

/// SVD pseudoinverse truncated with the same rank rule as rank_and_kernel.
Matrix pseudo_inverse(const Matrix& m, const Tolerance& tol = {});

double spectral_radius(const Matrix& a);

using EigenvalueCluster = std::vector<std::complex<double>>;

/// Groups eigenvalues closer than cluster_rel * (1 + |lambda|) (transitively)
/// and always merges conjugate pairs. Clusters are sorted by the largest
/// modulus first, then by real part, for deterministic output.
std::vector<EigenvalueCluster> cluster_eigenvalues(
    const std::vector<std::complex<double>>& eigenvalues,
    const Tolerance& tol = {});

struct InvariantEigenspace {
  EigenvalueCluster eigenvalues;  ///< with algebraic multiplicity
  Subspace eigenspace;
};

/// Real generalized eigenspaces of A, one per conjugate-closed eigenvalue
/// cluster, from a reordered real Schur form. The returned subspaces are
/// A-invariant, independent and sum to R^n. Throws NumericalError when the
/// Schur decomposition or reordering fails.
std::vector<InvariantEigenspace> real_invariant_eigenspaces(
    const Matrix& a, const Tolerance& tol = {});

}  // namespace stocheq
