#include "stocheq/relations.hpp"

#include <cmath>
#include <string>

#include "stocheq/errors.hpp"

namespace stocheq {

LinearRelation::LinearRelation(Matrix r1, Matrix r2)
    : r1_(std::move(r1)), r2_(std::move(r2)) {
  if (r1_.rows() != r2_.rows()) {
    throw DimensionError("relation: R1 and R2 must have equal row counts (" +
                         std::to_string(r1_.rows()) + " vs " +
                         std::to_string(r2_.rows()) + ")");
  }
  require_finite(r1_, "R1");
  require_finite(r2_, "R2");
}

LinearRelation LinearRelation::identity(Index n) {
  return {Matrix::Identity(n, n), Matrix::Identity(n, n)};
}

LinearRelation LinearRelation::graph(const Matrix& t) {
  return {t, Matrix::Identity(t.rows(), t.rows())};
}

LinearRelation LinearRelation::from_subspace(const Subspace& rel, Index n1) {
  const Index total = rel.ambient_dim();
  if (n1 < 0 || n1 > total) {
    throw DimensionError("relation from subspace: split point outside ambient");
  }
  const Matrix rows = orthogonal_complement(rel).basis().transpose();
  return {rows.leftCols(n1), -rows.rightCols(total - n1)};
}

Matrix stack_relation(const LinearRelation& rel) {
  Matrix s(rel.rows(), rel.n1() + rel.n2());
  s << rel.R1(), -rel.R2();
  return s;
}

Subspace relation_subspace(const LinearRelation& rel, const Tolerance& tol) {
  return kernel(stack_relation(rel), tol);
}

TotalityRanks totality_ranks(const LinearRelation& rel, const Tolerance& tol) {
  return {rank(rel.R1(), tol), rank(rel.R2(), tol),
          rank(stack_relation(rel), tol)};
}

bool is_total(const LinearRelation& rel, const Tolerance& tol) {
  return totality_ranks(rel, tol).total();
}

bool is_equivalence(const LinearRelation& rel, const Tolerance& tol,
                    EquivalenceMode mode) {
  if (rel.n1() != rel.n2()) return false;
  if (!is_total(rel, tol)) return false;
  if (mode == EquivalenceMode::kStrict) {
    return matrices_equal(rel.R1(), rel.R2(), tol).equal;
  }
  const Index n = rel.n1();
  Matrix diag(2 * n, n);
  diag << Matrix::Identity(n, n), Matrix::Identity(n, n);
  diag /= std::sqrt(2.0);
  return is_contained(Subspace::from_orthonormal(diag),
                      relation_subspace(rel, tol), tol);
}

namespace {

// {y : exists a with M_from a = M_to y} projected onto y, where the source
// subspace is parameterized by its basis.
Subspace preimage_of_image(const Matrix& m_from, const Subspace& source,
                           const Matrix& m_to, const Tolerance& tol) {
  const Index k = source.dim();
  const Index n_to = m_to.cols();
  Matrix system(m_to.rows(), k + n_to);
  system << m_from * source.basis(), -m_to;
  const Subspace sol = kernel(system, tol);
  return image(sol.basis().bottomRows(n_to), tol);
}

}  // namespace

Subspace forward_image(const LinearRelation& rel, const Subspace& x1,
                       const Tolerance& tol) {
  if (x1.ambient_dim() != rel.n1()) {
    throw DimensionError("forward_image: subspace ambient must equal n1 = " +
                         std::to_string(rel.n1()));
  }
  return preimage_of_image(rel.R1(), x1, rel.R2(), tol);
}

Subspace inverse_image(const LinearRelation& rel, const Subspace& x2,
                       const Tolerance& tol) {
  if (x2.ambient_dim() != rel.n2()) {
    throw DimensionError("inverse_image: subspace ambient must equal n2 = " +
                         std::to_string(rel.n2()));
  }
  return preimage_of_image(rel.R2(), x2, rel.R1(), tol);
}

LinearRelation canonical_presentation(const LinearRelation& rel,
                                      const Tolerance& tol) {
  return LinearRelation::from_subspace(relation_subspace(rel, tol), rel.n1());
}

}  // namespace stocheq
