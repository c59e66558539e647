#include "stocheq/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "stocheq/errors.hpp"

namespace stocheq {

std::string_view to_string(ConditionId id) {
  switch (id) {
    case ConditionId::p0: return "p0";
    case ConditionId::p1: return "p1";
    case ConditionId::p2: return "p2";
    case ConditionId::p3: return "p3";
    case ConditionId::p4: return "p4";
    case ConditionId::h0: return "h0";
    case ConditionId::h1: return "h1";
    case ConditionId::h2: return "h2";
    case ConditionId::h3: return "h3";
    case ConditionId::h4: return "h4";
    case ConditionId::h5: return "h5";
    case ConditionId::kost: return "kost";
    case ConditionId::lin: return "lin";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kEquivalent: return "equivalent";
    case Verdict::kNotEquivalent: return "not-equivalent";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

const Condition* CheckReport::find(ConditionId id,
                                   std::string_view label) const {
  for (const auto& c : conditions) {
    if (c.id == id && (label.empty() || c.label == label)) return &c;
  }
  return nullptr;
}

std::vector<const Condition*> CheckReport::failures() const {
  std::vector<const Condition*> out;
  for (const auto& c : conditions) {
    if (c.required && !c.passed) out.push_back(&c);
  }
  return out;
}

void CheckReport::settle() {
  verdict = failures().empty() ? Verdict::kEquivalent : Verdict::kNotEquivalent;
}

namespace {

Condition equality(ConditionId id, std::string label, const Matrix& lhs,
                   const Matrix& rhs, const Tolerance& tol) {
  const EqualityResult eq = matrices_equal(lhs, rhs, tol);
  Condition c{id, std::move(label)};
  c.passed = eq.equal;
  c.residual = eq.residual;
  return c;
}

Condition containment(ConditionId id, std::string label, const Subspace& u,
                      const Subspace& v, const Tolerance& tol) {
  Condition c{id, std::move(label)};
  c.residual = containment_residual(u, v);
  c.passed = c.residual <= tol.subspace_angle() && u.dim() <= v.dim();
  return c;
}

Condition totality(const LinearRelation& rel, const Tolerance& tol,
                   bool required) {
  const TotalityRanks r = totality_ranks(rel, tol);
  Condition c{ConditionId::kost,
              "rank(R1)=" + std::to_string(r.rank_r1) +
                  " rank(R2)=" + std::to_string(r.rank_r2) +
                  " rank([R1 -R2])=" + std::to_string(r.rank_stack)};
  c.passed = r.total();
  c.residual = static_cast<double>(
      std::max({r.rank_r1, r.rank_r2, r.rank_stack}) -
      std::min({r.rank_r1, r.rank_r2, r.rank_stack}));
  c.required = required;
  return c;
}

Matrix block_diag(const Matrix& a1, const Matrix& a2) {
  Matrix d = Matrix::Zero(a1.rows() + a2.rows(), a1.cols() + a2.cols());
  d.topLeftCorner(a1.rows(), a1.cols()) = a1;
  d.bottomRightCorner(a2.rows(), a2.cols()) = a2;
  return d;
}

Matrix obs_or_empty(const Matrix& a, const Matrix& c, Index steps) {
  if (a.rows() == 0) return Matrix(c.rows() * steps, 0);
  return obs_matrix(a, c, steps);
}

void require_same_io(const StochasticLinearSystem& s1,
                     const StochasticLinearSystem& s2, bool inputs,
                     std::string_view op) {
  if (s1.p() != s2.p()) {
    throw DimensionError(std::string(op) + ": output dimensions differ (" +
                         std::to_string(s1.p()) + " vs " +
                         std::to_string(s2.p()) + ")");
  }
  if (inputs && s1.m() != s2.m()) {
    throw DimensionError(std::string(op) + ": input dimensions differ (" +
                         std::to_string(s1.m()) + " vs " +
                         std::to_string(s2.m()) + ")");
  }
}

// p0-p3 with the time quantifiers truncated at `horizon` steps.
struct OutputLawConditions {
  Matrix q1;
  Matrix q2;
  std::vector<Condition> conditions;
};

OutputLawConditions output_law_conditions(const StochasticLinearSystem& s1,
                                          const StochasticLinearSystem& s2,
                                          Index horizon, bool with_inputs,
                                          bool with_means,
                                          const Tolerance& tol) {
  OutputLawConditions out;
  out.q1 = obs_or_empty(s1.A, s1.C, horizon);
  out.q2 = obs_or_empty(s2.A, s2.C, horizon);
  const std::string range = "t < " + std::to_string(horizon);

  out.conditions.push_back(
      equality(ConditionId::p0, "Psi1 = Psi2", s1.Psi, s2.Psi, tol));
  if (with_inputs) {
    out.conditions.push_back(equality(ConditionId::p1,
                                      "C1 A1^t B1 = C2 A2^t B2, " + range,
                                      out.q1 * s1.B, out.q2 * s2.B, tol));
  }
  if (with_means) {
    out.conditions.push_back(equality(
        ConditionId::p2, "C1 A1^t G1 mu1 = C2 A2^t G2 mu2, " + range,
        out.q1 * (s1.G * s1.mu), out.q2 * (s2.G * s2.mu), tol));
  }
  const Matrix qg1 = out.q1 * s1.G;
  const Matrix qg2 = out.q2 * s2.G;
  Condition p3 = equality(ConditionId::p3,
                          "C1 A1^k G1 G1^T A1^h^T C1^T = (same for 2), h,k < " +
                              std::to_string(horizon),
                          qg1 * qg1.transpose(), qg2 * qg2.transpose(), tol);
  // Image-level witness H with Q1 G1 H = Q2 G2.
  const Matrix h = pseudo_inverse(qg1, tol) * qg2;
  if (matrices_equal(qg1 * h, qg2, tol).equal) p3.witness = h;
  out.conditions.push_back(std::move(p3));
  return out;
}

Index truncation(const StochasticLinearSystem& s1,
                 const StochasticLinearSystem& s2, Index horizon) {
  if (horizon > 0) return horizon;
  return std::max<Index>(1, s1.n() + s2.n());
}

}  // namespace

ExtendedSystem extended_system(const StochasticLinearSystem& s1,
                               const StochasticLinearSystem& s2) {
  require_same_io(s1, s2, true, "extended_system");
  ExtendedSystem e;
  e.A = block_diag(s1.A, s2.A);
  e.B.resize(s1.n() + s2.n(), s1.m());
  e.B << s1.B, s2.B;
  e.C.resize(s1.p(), s1.n() + s2.n());
  e.C << s1.C, -s2.C;
  return e;
}

CheckReport check_linear_equivalence(const StochasticLinearSystem& s1,
                                     const StochasticLinearSystem& s2,
                                     const Matrix& t, const Tolerance& tol) {
  if (s1.n() != s2.n()) {
    throw DimensionError("check_linear_equivalence: state dimensions differ (" +
                         std::to_string(s1.n()) + " vs " +
                         std::to_string(s2.n()) + ")");
  }
  if (t.rows() != s1.n() || t.cols() != s1.n()) {
    throw DimensionError("check_linear_equivalence: T must be " +
                         std::to_string(s1.n()) + "x" +
                         std::to_string(s1.n()));
  }
  require_same_io(s1, s2, true, "check_linear_equivalence");
  require_finite(t, "T");

  CheckReport report;
  report.check = "linear";
  report.tolerance = tol;
  report.conditions.push_back(
      equality(ConditionId::p0, "Psi1 = Psi2", s1.Psi, s2.Psi, tol));

  const Index n = s1.n();
  Condition invertible{ConditionId::lin, "T invertible"};
  invertible.passed = rank(t, tol) == n;
  if (n > 0) {
    Eigen::JacobiSVD<Matrix> svd(t);
    const auto& sv = svd.singularValues();
    invertible.residual = sv(0) > 0.0 ? sv(n - 1) / sv(0) : 0.0;
  }
  report.conditions.push_back(invertible);

  if (!invertible.passed) {
    report.notes.push_back("T is singular; transform identities not evaluated");
    report.settle();
    return report;
  }
  const Matrix t_inv = t.fullPivLu().inverse();
  report.conditions.push_back(equality(ConditionId::lin, "A2 = T A1 T^-1",
                                       s2.A, t * s1.A * t_inv, tol));
  report.conditions.push_back(
      equality(ConditionId::lin, "B2 = T B1", s2.B, t * s1.B, tol));
  report.conditions.push_back(
      equality(ConditionId::lin, "C2 = C1 T^-1", s2.C, s1.C * t_inv, tol));
  if (s1.l() == s2.l()) {
    report.conditions.push_back(
        equality(ConditionId::lin, "G2 = T G1", s2.G, t * s1.G, tol));
  } else {
    Condition g{ConditionId::lin, "G2 = T G1"};
    g.residual = std::numeric_limits<double>::infinity();
    report.conditions.push_back(g);
    report.notes.push_back("noise dimensions differ (l1 = " +
                           std::to_string(s1.l()) + ", l2 = " +
                           std::to_string(s2.l()) + ")");
  }
  report.conditions.push_back(equality(ConditionId::lin,
                                       "G2 mu2 = T G1 mu1", s2.G * s2.mu,
                                       t * (s1.G * s1.mu), tol));
  report.settle();
  return report;
}

Matrix derive_transformation(const LinearRelation& rel, const Tolerance& tol) {
  const TotalityRanks r = totality_ranks(rel, tol);
  if (!r.total()) {
    throw PreconditionError(
        "derive_transformation: relation is not total (rank R1 = " +
        std::to_string(r.rank_r1) + ", rank R2 = " +
        std::to_string(r.rank_r2) +
        ", rank [R1 -R2] = " + std::to_string(r.rank_stack) + ")");
  }
  if (rel.n1() != rel.n2() || r.rank_r2 != rel.n2()) {
    throw PreconditionError(
        "derive_transformation: requires rank(R2) = n2 = n1 (got rank " +
        std::to_string(r.rank_r2) + ", n1 = " + std::to_string(rel.n1()) +
        ", n2 = " + std::to_string(rel.n2()) +
        "); the relation is not the graph of a nonsingular map");
  }
  Matrix t = pseudo_inverse(rel.R2(), tol) * rel.R1();
  if (rank(t, tol) != rel.n1()) {
    throw PreconditionError("derive_transformation: T = pinv(R2) R1 is "
                            "singular");
  }
  return t;
}

LinearRelation maximal_external_relation(const StochasticLinearSystem& s1,
                                         const StochasticLinearSystem& s2,
                                         const Tolerance& tol) {
  require_same_io(s1, s2, false, "maximal_external_relation");
  const Index steps = truncation(s1, s2, 0);
  LinearRelation rel(obs_or_empty(s1.A, s1.C, steps),
                     obs_or_empty(s2.A, s2.C, steps));
  const Subspace k = relation_subspace(rel, tol);
  if (!is_invariant(block_diag(s1.A, s2.A), k, tol)) {
    throw NumericalError("maximal_external_relation: kernel of the stacked "
                         "observability matrices is not diag(A1, A2)-"
                         "invariant; data too ill-conditioned");
  }
  return rel;
}

CheckReport check_external_equivalence(const StochasticLinearSystem& s1,
                                       const StochasticLinearSystem& s2,
                                       const std::optional<LinearRelation>& rel,
                                       const Tolerance& tol, Index horizon) {
  require_same_io(s1, s2, true, "check_external_equivalence");
  const Index steps = truncation(s1, s2, horizon);

  CheckReport report;
  report.check = "external";
  report.tolerance = tol;
  auto law = output_law_conditions(s1, s2, steps, true, true, tol);
  report.conditions = std::move(law.conditions);

  LinearRelation maximal(law.q1, law.q2);
  const Subspace maximal_space = relation_subspace(maximal, tol);

  if (rel) {
    if (rel->n1() != s1.n() || rel->n2() != s2.n()) {
      throw DimensionError("check_external_equivalence: relation is " +
                           std::to_string(rel->n1()) + "+" +
                           std::to_string(rel->n2()) + ", systems are " +
                           std::to_string(s1.n()) + "+" +
                           std::to_string(s2.n()));
    }
    Condition p4 = containment(ConditionId::p4,
                               "R subset of ker([Q1 -Q2])",
                               relation_subspace(*rel, tol), maximal_space,
                               tol);
    report.conditions.push_back(std::move(p4));
    report.conditions.push_back(totality(*rel, tol, false));
    report.notes.push_back("verdict is equivalence with respect to the given "
                           "relation; kost reported for information");
  } else {
    Condition kost = totality(maximal, tol, true);
    kost.witness_subspace = maximal_space;
    report.conditions.push_back(std::move(kost));
    report.notes.push_back("relation omitted: checked totality of the maximal "
                           "relation ker([Q1 -Q2])");
  }
  report.settle();
  return report;
}

CheckReport check_bisimulation(const StochasticLinearSystem& s1,
                               const StochasticLinearSystem& s2,
                               const LinearRelation& rel,
                               const Tolerance& tol) {
  require_same_io(s1, s2, true, "check_bisimulation");
  if (rel.n1() != s1.n() || rel.n2() != s2.n()) {
    throw DimensionError("check_bisimulation: relation is " +
                         std::to_string(rel.n1()) + "+" +
                         std::to_string(rel.n2()) + ", systems are " +
                         std::to_string(s1.n()) + "+" +
                         std::to_string(s2.n()));
  }
  Condition kost = totality(rel, tol, true);
  if (!kost.passed) {
    throw PreconditionError("check_bisimulation: relation is not total (" +
                            kost.label + ")");
  }

  CheckReport report;
  report.check = "bisimulation";
  report.tolerance = tol;
  report.conditions.push_back(
      equality(ConditionId::p0, "Psi1 = Psi2", s1.Psi, s2.Psi, tol));
  report.conditions.push_back(std::move(kost));

  const Subspace rel_space = relation_subspace(rel, tol);
  const Matrix& r1 = rel.R1();
  const Matrix& r2 = rel.R2();

  Condition h0{ConditionId::h0, "diag(A1, A2) R subset of R"};
  h0.residual = invariance_residual(block_diag(s1.A, s2.A), rel_space);
  h0.passed = h0.residual <= tol.subspace_angle();
  report.conditions.push_back(h0);

  report.conditions.push_back(
      equality(ConditionId::h1, "R1 B1 = R2 B2", r1 * s1.B, r2 * s2.B, tol));
  report.conditions.push_back(equality(ConditionId::h2,
                                       "R1 G1 mu1 = R2 G2 mu2",
                                       r1 * (s1.G * s1.mu),
                                       r2 * (s2.G * s2.mu), tol));
  const Matrix rg1 = r1 * s1.G;
  const Matrix rg2 = r2 * s2.G;
  Condition h3 = equality(ConditionId::h3, "R1 G1 G1^T R1^T = R2 G2 G2^T R2^T",
                          rg1 * rg1.transpose(), rg2 * rg2.transpose(), tol);
  if (h3.passed) {
    const Matrix h = pseudo_inverse(rg1, tol) * rg2;
    if (matrices_equal(rg1 * h, rg2, tol).equal) h3.witness = h;
  }
  report.conditions.push_back(std::move(h3));

  Matrix c_stack(s1.p(), s1.n() + s2.n());
  c_stack << s1.C, -s2.C;
  report.conditions.push_back(containment(ConditionId::h4,
                                          "R subset of ker([C1 -C2])",
                                          rel_space, kernel(c_stack, tol),
                                          tol));

  const StochasticLinearSystem* systems[] = {&s1, &s2};
  const Matrix* rs[] = {&r1, &r2};
  for (int i = 0; i < 2; ++i) {
    const auto& s = *systems[i];
    Condition h5{ConditionId::h5,
                 "im(Reach(A" + std::to_string(i + 1) + ", G" +
                     std::to_string(i + 1) + ")) cap ker(R" +
                     std::to_string(i + 1) + ") = {0}, i=" +
                     std::to_string(i + 1)};
    Subspace meet(s.n());
    if (s.n() > 0) {
      meet = intersect(image(noise_reach_matrix(s), tol), kernel(*rs[i], tol),
                       tol);
    }
    h5.passed = meet.is_zero();
    h5.residual = static_cast<double>(meet.dim());
    if (!meet.is_zero()) h5.witness_subspace = meet;
    report.conditions.push_back(std::move(h5));
  }

  bool necessary_ok = true;
  for (const auto& c : report.conditions) {
    if (c.id != ConditionId::h0 && c.required && !c.passed) necessary_ok = false;
  }
  if (!necessary_ok) {
    report.verdict = Verdict::kNotEquivalent;
  } else if (!h0.passed) {
    report.verdict = Verdict::kInconclusive;
    report.notes.push_back(
        "h0 fails: the relation is not diag(A1, A2)-invariant, so the "
        "geometric characterization does not decide this relation");
  } else {
    report.verdict = Verdict::kEquivalent;
  }
  return report;
}

LinearRelation nondegenerate_relation(const StochasticLinearSystem& s1,
                                      const StochasticLinearSystem& s2,
                                      const Tolerance& tol) {
  if (s1.n() != s2.n()) {
    throw DimensionError("nondegenerate_relation: state dimensions differ");
  }
  if (s1.n() == 0) return LinearRelation::identity(0);
  const Index n = s1.n();
  return {pseudo_inverse(reach_matrix(s1.A, s1.G, n), tol),
          pseudo_inverse(reach_matrix(s2.A, s2.G, n), tol)};
}

CheckReport check_bisim_nondegenerate(const StochasticLinearSystem& s1,
                                      const StochasticLinearSystem& s2,
                                      const Tolerance& tol) {
  require_same_io(s1, s2, true, "check_bisim_nondegenerate");
  const StochasticLinearSystem* systems[] = {&s1, &s2};
  for (int i = 0; i < 2; ++i) {
    const auto& s = *systems[i];
    if (s.n() == 0) continue;
    const Index r = rank(noise_reach_matrix(s), tol);
    if (r != s.n()) {
      throw PreconditionError(
          "check_bisim_nondegenerate: system " + std::to_string(i + 1) +
          " has degenerate noise (rank Reach(A, G) = " + std::to_string(r) +
          " < n = " + std::to_string(s.n()) +
          "); use check_bisimulation with an explicit relation");
    }
  }

  CheckReport report;
  report.check = "bisimulation-nondegenerate";
  report.tolerance = tol;
  if (s1.n() != s2.n()) {
    Condition dims{ConditionId::lin, "n1 = n2"};
    dims.residual = static_cast<double>(std::abs(s1.n() - s2.n()));
    report.conditions.push_back(dims);
    report.notes.push_back("non-degenerate systems of different dimension "
                           "cannot be bisimilar");
    report.settle();
    return report;
  }

  const LinearRelation candidate = nondegenerate_relation(s1, s2, tol);
  Condition kost = totality(candidate, tol, true);
  Matrix t;
  try {
    t = derive_transformation(candidate, tol);
  } catch (const PreconditionError& e) {
    report.conditions.push_back(kost);
    report.notes.push_back(std::string("no candidate transformation: ") +
                           e.what());
    report.settle();
    return report;
  }

  CheckReport lin = check_linear_equivalence(s1, s2, t, tol);
  report.conditions.push_back(kost);
  for (auto& c : lin.conditions) report.conditions.push_back(std::move(c));
  report.conditions.back().witness = t;
  report.notes.push_back("candidate relation (pinv(Reach1), pinv(Reach2)); "
                         "T = Reach2 pinv(Reach1)");
  report.settle();
  return report;
}

CheckReport check_same_realization(const StochasticLinearSystem& s1,
                                   const StochasticLinearSystem& s2,
                                   const Tolerance& tol) {
  require_same_io(s1, s2, false, "check_same_realization");
  const StochasticLinearSystem* systems[] = {&s1, &s2};
  for (int i = 0; i < 2; ++i) {
    const auto& s = *systems[i];
    const double rho = spectral_radius(s.A);
    if (rho >= 1.0) {
      throw PreconditionError("check_same_realization: system " +
                              std::to_string(i + 1) +
                              " is not stable (spectral radius " +
                              std::to_string(rho) + ")");
    }
    if (s.mu.size() > 0 && s.mu.lpNorm<Eigen::Infinity>() > tol.eq_abs) {
      throw PreconditionError("check_same_realization: system " +
                              std::to_string(i + 1) +
                              " has nonzero disturbance mean");
    }
  }
  CheckReport report;
  report.check = "realization";
  report.tolerance = tol;
  report.conditions =
      output_law_conditions(s1, s2, truncation(s1, s2, 0), false, false, tol)
          .conditions;
  report.settle();
  return report;
}

}  // namespace stocheq
