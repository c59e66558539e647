#pragma once

// Subspace relations R = ker([R1 -R2]) between R^n1 and R^n2:
// (x1, x2) in R  <=>  R1 x1 = R2 x2.

#include "stocheq/numlin.hpp"

namespace stocheq {

class LinearRelation {
 public:
  /// Throws DimensionError unless R1 and R2 have the same row count, and
  /// std::invalid_argument on non-finite entries.
  LinearRelation(Matrix r1, Matrix r2);

  /// Graph of the identity on R^n: R1 = R2 = I.
  static LinearRelation identity(Index n);
  /// Graph of x2 = T x1: R1 = T, R2 = I.
  static LinearRelation graph(const Matrix& t);
  /// Presentation of an arbitrary subspace of R^{n1+n2} as a relation.
  static LinearRelation from_subspace(const Subspace& rel, Index n1);

  [[nodiscard]] const Matrix& R1() const { return r1_; }
  [[nodiscard]] const Matrix& R2() const { return r2_; }
  [[nodiscard]] Index rows() const { return r1_.rows(); }
  [[nodiscard]] Index n1() const { return r1_.cols(); }
  [[nodiscard]] Index n2() const { return r2_.cols(); }

  /// The relation seen from the other side: (R2, R1).
  [[nodiscard]] LinearRelation swapped() const { return {r2_, r1_}; }

 private:
  Matrix r1_;
  Matrix r2_;
};

/// [R1 -R2].
Matrix stack_relation(const LinearRelation& rel);

/// ker([R1 -R2]) as a subspace of R^{n1+n2}.
Subspace relation_subspace(const LinearRelation& rel, const Tolerance& tol = {});

struct TotalityRanks {
  Index rank_r1 = 0;
  Index rank_r2 = 0;
  Index rank_stack = 0;
  [[nodiscard]] bool total() const {
    return rank_r1 == rank_r2 && rank_r2 == rank_stack;
  }
};

TotalityRanks totality_ranks(const LinearRelation& rel,
                             const Tolerance& tol = {});
bool is_total(const LinearRelation& rel, const Tolerance& tol = {});

enum class EquivalenceMode {
  /// Subspace-level test: total and containing the diagonal {(x, x)}.
  /// Independent of the presentation (R1, R2).
  kCanonical,
  /// Literal R1 == R2 within the matrix-equality tolerance, plus totality.
  kStrict,
};

/// Whether the relation is an equivalence relation on R^n. Returns false
/// (not an error) when n1 != n2.
bool is_equivalence(const LinearRelation& rel, const Tolerance& tol = {},
                    EquivalenceMode mode = EquivalenceMode::kCanonical);

/// R(X1) = {x2 : R2 x2 in R1 X1}.
Subspace forward_image(const LinearRelation& rel, const Subspace& x1,
                       const Tolerance& tol = {});
/// R^{-1}(X2) = {x1 : R1 x1 in R2 X2}.
Subspace inverse_image(const LinearRelation& rel, const Subspace& x2,
                       const Tolerance& tol = {});

/// Same relation subspace with a minimal number of orthonormal rows.
LinearRelation canonical_presentation(const LinearRelation& rel,
                                      const Tolerance& tol = {});

}  // namespace stocheq
