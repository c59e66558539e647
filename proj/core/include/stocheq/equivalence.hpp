#pragma once

// Decision procedures for linear equivalence, stochastic external-behavior
// equivalence and stochastic bisimulation of two stochastic linear systems.
//
// Every "for all t" quantifier is truncated at n_ext = n1 + n2 steps
// (Cayley-Hamilton on the extended system diag(A1, A2)).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stocheq/numlin.hpp"
#include "stocheq/relations.hpp"
#include "stocheq/sysmodel.hpp"

namespace stocheq {

enum class ConditionId {
  p0, p1, p2, p3, p4,
  h0, h1, h2, h3, h4, h5,
  kost,  ///< totality rank test
  lin,   ///< one of the similarity-transform identities
};

std::string_view to_string(ConditionId id);

struct Condition {
  ConditionId id;
  std::string label;
  bool passed = false;
  double residual = 0.0;
  /// Conditions with required == false are diagnostics only.
  bool required = true;
  std::optional<Matrix> witness = std::nullopt;
  std::optional<Subspace> witness_subspace = std::nullopt;
};

enum class Verdict {
  kEquivalent,
  kNotEquivalent,
  /// The decision rule does not apply (bisimulation with h0 failing).
  kInconclusive,
};

std::string_view to_string(Verdict v);

struct CheckReport {
  std::string check;
  Verdict verdict = Verdict::kNotEquivalent;
  std::vector<Condition> conditions;
  std::vector<std::string> notes;
  Tolerance tolerance;

  [[nodiscard]] bool holds() const { return verdict == Verdict::kEquivalent; }
  [[nodiscard]] const Condition* find(ConditionId id,
                                      std::string_view label = {}) const;
  /// Required conditions that failed, in evaluation order.
  [[nodiscard]] std::vector<const Condition*> failures() const;
  /// Sets verdict to the conjunction of the required conditions.
  void settle();
};

/// Extended system: diag(A1, A2), col(B1, B2), row(C1, -C2).
struct ExtendedSystem {
  Matrix A;
  Matrix B;
  Matrix C;
};

ExtendedSystem extended_system(const StochasticLinearSystem& s1,
                               const StochasticLinearSystem& s2);

/// Psi1 == Psi2, T invertible and A2 = T A1 T^-1, B2 = T B1, C2 = C1 T^-1,
/// G2 = T G1, G2 mu2 = T G1 mu1. Throws DimensionError when n1 != n2 or T
/// is not n1 x n1.
CheckReport check_linear_equivalence(const StochasticLinearSystem& s1,
                                     const StochasticLinearSystem& s2,
                                     const Matrix& t,
                                     const Tolerance& tol = {});

/// T = pinv(R2) R1 for a total relation with rank(R2) = n2 = n1. Throws
/// PreconditionError otherwise.
Matrix derive_transformation(const LinearRelation& rel,
                             const Tolerance& tol = {});

/// Conditions p0-p3 on the output laws plus, when a relation is given, the
/// inclusion p4 of the relation in ker([Obs(A1,C1) -Obs(A2,C2)]). Without a
/// relation the verdict also requires totality of that maximal relation.
/// `horizon` overrides the truncation n1 + n2 (used to test its adequacy).
CheckReport check_external_equivalence(
    const StochasticLinearSystem& s1, const StochasticLinearSystem& s2,
    const std::optional<LinearRelation>& rel, const Tolerance& tol = {},
    Index horizon = 0);

/// ker([Obs_n(A1,C1) -Obs_n(A2,C2)]), n = n1 + n2.
LinearRelation maximal_external_relation(const StochasticLinearSystem& s1,
                                         const StochasticLinearSystem& s2,
                                         const Tolerance& tol = {});

/// Geometric bisimulation test h0-h5 for a total relation (p0 checked as
/// well). Throws PreconditionError for a non-total relation.
CheckReport check_bisimulation(const StochasticLinearSystem& s1,
                               const StochasticLinearSystem& s2,
                               const LinearRelation& rel,
                               const Tolerance& tol = {});

/// Candidate relation (pinv(Reach(A1, G1)), pinv(Reach(A2, G2))) of the
/// non-degenerate test; its derived transformation is Reach2 pinv(Reach1).
/// Throws DimensionError when n1 != n2.
LinearRelation nondegenerate_relation(const StochasticLinearSystem& s1,
                                      const StochasticLinearSystem& s2,
                                      const Tolerance& tol = {});

/// Bisimulation for systems with non-degenerate noise (rank Reach(A_i, G_i)
/// = n_i), decided as linear equivalence. Throws PreconditionError on
/// degenerate input.
CheckReport check_bisim_nondegenerate(const StochasticLinearSystem& s1,
                                      const StochasticLinearSystem& s2,
                                      const Tolerance& tol = {});

/// Whether two stable, zero-mean-noise systems realize the same stationary
/// output process (p0 and p3).
CheckReport check_same_realization(const StochasticLinearSystem& s1,
                                   const StochasticLinearSystem& s2,
                                   const Tolerance& tol = {});

}  // namespace stocheq
