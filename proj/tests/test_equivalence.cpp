#include <gtest/gtest.h>

#include "test_support.hpp"

namespace stocheq {
namespace {

using testing::load_relation_fixture;
using testing::load_system_fixture;
using testing::mat;
using testing::Rng;
using testing::similar;

bool all_pass(const CheckReport& r, ConditionId id) {
  bool any = false;
  for (const auto& c : r.conditions) {
    if (c.id != id) continue;
    any = true;
    if (!c.passed) return false;
  }
  return any;
}

TEST(ExtendedSystem, BlockStructure) {
  const auto s1 = load_system_fixture("example1_sys1.json");
  const auto s2 = load_system_fixture("example1_sys2.json");
  const ExtendedSystem e = extended_system(s1, s2);
  EXPECT_EQ(e.A, mat({{1, 0, 0}, {0, 2, 0}, {0, 0, 1}}));
  EXPECT_EQ(e.B, mat({{1}, {0}, {1}}));
  EXPECT_EQ(e.C, mat({{1, 0, -1}}));
}

TEST(Linear, SelfWithIdentity) {
  Rng rng(1);
  const auto s = rng.system(3, 2, 2, 2, 0.9);
  EXPECT_TRUE(check_linear_equivalence(s, s, Matrix::Identity(3, 3)).holds());
}

TEST(Linear, ConstructedSimilarityPair) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = rng.integer(1, 5);
    const auto s1 = rng.system(n, 2, rng.integer(1, 3), 2, 1.2);
    const Matrix t = rng.well_conditioned(n);
    const auto s2 = similar(s1, t);
    EXPECT_TRUE(check_linear_equivalence(s1, s2, t).holds()) << trial;
    Matrix wrong = t;
    wrong(0, 0) += 0.1;
    EXPECT_FALSE(check_linear_equivalence(s1, s2, wrong).holds()) << trial;
  }
}

TEST(Linear, DimensionMismatchIsAnError) {
  const auto s1 = load_system_fixture("example1_sys1.json");
  const auto s2 = load_system_fixture("example1_sys2.json");
  EXPECT_THROW(check_linear_equivalence(s1, s2, Matrix::Identity(2, 2)),
               DimensionError);
}

TEST(Linear, SingularTransformFails) {
  Rng rng(3);
  const auto s = rng.system(2, 1, 1, 1, 0.5);
  const CheckReport r = check_linear_equivalence(s, s, Matrix::Zero(2, 2));
  EXPECT_FALSE(r.holds());
  EXPECT_FALSE(r.find(ConditionId::lin, "T invertible")->passed);
}

TEST(DeriveTransformation, HandCases) {
  EXPECT_TRUE(derive_transformation(LinearRelation::identity(3))
                  .isApprox(Matrix::Identity(3, 3)));
  EXPECT_TRUE(derive_transformation(LinearRelation(2.0 * Matrix::Identity(2, 2),
                                                   Matrix::Identity(2, 2)))
                  .isApprox(2.0 * Matrix::Identity(2, 2)));
  Rng rng(4);
  const Matrix r1 = rng.gaussian(4, 3);
  const Matrix r2 = rng.gaussian(4, 3);
  // Total only when im(R1) = im(R2); build R1 = R2 M.
  const Matrix m = rng.well_conditioned(3);
  const Matrix t = derive_transformation(LinearRelation(r2 * m, r2));
  EXPECT_LT((r2 * t - r2 * m).norm(), 1e-10);
  EXPECT_THROW(derive_transformation(LinearRelation(r1, r2)), PreconditionError);
  EXPECT_THROW(derive_transformation(LinearRelation(mat({{1, 0}}), mat({{1}}))),
               PreconditionError);
}

TEST(External, ThirdExampleWithRelation) {
  const auto s1 = load_system_fixture("example3_sys1.json");
  const auto s2 = load_system_fixture("example3_sys2.json");
  const auto rel = load_relation_fixture("example3_relation.json");
  const CheckReport r = check_external_equivalence(s1, s2, rel);
  EXPECT_TRUE(r.holds());
  for (ConditionId id : {ConditionId::p0, ConditionId::p1, ConditionId::p2,
                         ConditionId::p3, ConditionId::p4}) {
    EXPECT_TRUE(all_pass(r, id)) << to_string(id);
  }
}

TEST(External, PerturbedOutputFailsAtInputResponse) {
  const auto s1 = load_system_fixture("example3_sys1.json");
  auto s2 = load_system_fixture("example3_sys2.json");
  s2.C(0, 0) = 1.0 + 1e-3;
  const auto rel = load_relation_fixture("example3_relation.json");
  const CheckReport r = check_external_equivalence(s1, s2, rel);
  EXPECT_FALSE(r.holds());
  EXPECT_FALSE(all_pass(r, ConditionId::p1));
  // First Markov parameter: C1 B1 = 1 against C2 B2 = 1.001.
  EXPECT_NEAR(r.find(ConditionId::p1)->residual, 1e-3, 1e-3);
}

TEST(External, SelfWithIdentityAndWithoutRelation) {
  Rng rng(5);
  const auto s = rng.system(3, 1, 2, 2, 1.1);
  EXPECT_TRUE(check_external_equivalence(s, s, LinearRelation::identity(3)).holds());
  EXPECT_TRUE(check_external_equivalence(s, s, std::nullopt).holds());
}

TEST(External, OutputNoiseMismatchFailsAtP0) {
  Rng rng(6);
  const auto s = rng.system(2, 1, 1, 2, 0.5);
  auto t = s;
  t.Psi += Matrix::Identity(2, 2);
  const CheckReport r = check_external_equivalence(s, t, LinearRelation::identity(2));
  EXPECT_FALSE(r.holds());
  EXPECT_FALSE(r.find(ConditionId::p0)->passed);
}

TEST(External, TruncationMatchesDoubleHorizon) {
  Rng rng(7);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = rng.integer(1, 4);
    const auto s1 = rng.system(n, 1, 1, 1, rng.uniform(0.5, 1.3));
    auto s2 = rng.coin() ? similar(s1, rng.well_conditioned(n))
                         : rng.system(n, 1, 1, 1, 0.9);
    const Index nt = s1.n() + s2.n();
    const CheckReport a = check_external_equivalence(s1, s2, std::nullopt, {}, nt);
    const CheckReport b =
        check_external_equivalence(s1, s2, std::nullopt, {}, 2 * nt);
    for (ConditionId id : {ConditionId::p1, ConditionId::p2}) {
      EXPECT_EQ(all_pass(a, id), all_pass(b, id)) << trial << to_string(id);
    }
  }
}

TEST(MaximalRelation, ObservableSelfPairIsDiagonal) {
  Rng rng(8);
  const auto s = rng.system(3, 1, 1, 1, 0.8);
  ASSERT_EQ(rank(observability_matrix(s)), 3);
  const LinearRelation rel = maximal_external_relation(s, s);
  EXPECT_EQ(relation_subspace(rel).dim(), 3);
  EXPECT_TRUE(subspaces_equal(relation_subspace(rel),
                              relation_subspace(LinearRelation::identity(3))));
}

TEST(MaximalRelation, ThirdExample) {
  const auto s1 = load_system_fixture("example3_sys1.json");
  const auto s2 = load_system_fixture("example3_sys2.json");
  const LinearRelation rel = maximal_external_relation(s1, s2);
  EXPECT_TRUE(subspaces_equal(
      relation_subspace(rel),
      relation_subspace(LinearRelation(mat({{1, 0}}), mat({{1}})))));
}

TEST(MaximalRelation, UnobservableAugmentationGrowsKernel) {
  Rng rng(9);
  const auto s1 = rng.system(2, 1, 1, 1, 0.7);
  ASSERT_EQ(rank(observability_matrix(s1)), 2);
  // Append k states that nothing reads.
  const Index k = 2;
  Matrix a = Matrix::Zero(4, 4);
  a.topLeftCorner(2, 2) = s1.A;
  a.bottomRightCorner(2, 2) = rng.gaussian(2, 2);
  a.bottomLeftCorner(2, 2) = rng.gaussian(2, 2);
  Matrix b(4, 1);
  b << s1.B, rng.gaussian(2, 1);
  Matrix c = Matrix::Zero(1, 4);
  c.leftCols(2) = s1.C;
  Matrix g(4, 1);
  g << s1.G, rng.gaussian(2, 1);
  const auto s2 = make_system(a, b, c, g, s1.mu, s1.Psi);
  EXPECT_EQ(relation_subspace(maximal_external_relation(s1, s2)).dim(),
            relation_subspace(maximal_external_relation(s1, s1)).dim() + k);
}

TEST(Bisimulation, FirstExampleAllConditionsHold) {
  const auto s1 = load_system_fixture("example1_sys1.json");
  const auto s2 = load_system_fixture("example1_sys2.json");
  const auto rel = load_relation_fixture("example1_relation.json");
  const CheckReport r = check_bisimulation(s1, s2, rel);
  EXPECT_EQ(r.verdict, Verdict::kEquivalent);
  for (ConditionId id : {ConditionId::h0, ConditionId::h1, ConditionId::h2,
                         ConditionId::h3, ConditionId::h4, ConditionId::h5}) {
    EXPECT_TRUE(all_pass(r, id)) << to_string(id);
  }
}

TEST(Bisimulation, ThirdExampleFailsOnlyAtNoiseKernelCondition) {
  const auto s1 = load_system_fixture("example3_sys1.json");
  const auto s2 = load_system_fixture("example3_sys2.json");
  const auto rel = load_relation_fixture("example3_relation.json");
  const CheckReport r = check_bisimulation(s1, s2, rel);
  EXPECT_EQ(r.verdict, Verdict::kNotEquivalent);
  const auto failures = r.failures();
  ASSERT_EQ(failures.size(), 1u);
  EXPECT_EQ(failures[0]->id, ConditionId::h5);
  EXPECT_NE(failures[0]->label.find("i=1"), std::string::npos);
}

TEST(Bisimulation, SelfIdentityAndSymmetry) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = rng.system(rng.integer(1, 4), 1, rng.integer(1, 2), 1, 0.9);
    EXPECT_TRUE(check_bisimulation(s, s, LinearRelation::identity(s.n())).holds());
  }
  const auto s1 = load_system_fixture("example3_sys1.json");
  const auto s2 = load_system_fixture("example3_sys2.json");
  const auto rel = load_relation_fixture("example3_relation.json");
  EXPECT_EQ(check_bisimulation(s1, s2, rel).verdict,
            check_bisimulation(s2, s1, rel.swapped()).verdict);
}

TEST(Bisimulation, NonTotalRelationIsAPreconditionError) {
  const auto s = load_system_fixture("example1_sys1.json");
  EXPECT_THROW(check_bisimulation(s, s, LinearRelation(mat({{1, 0}, {0, 0}}),
                                                       mat({{1, 0}, {0, 1}}))),
               PreconditionError);
}

TEST(Bisimulation, ClosureRelationsAndTheirSum) {
  const auto s = load_system_fixture("closure_sys.json");
  EXPECT_TRUE(check_bisimulation(s, s, load_relation_fixture("closure_relation_b.json")).holds());
  EXPECT_TRUE(check_bisimulation(s, s, load_relation_fixture("closure_relation_b_prime.json")).holds());
  const CheckReport r =
      check_bisimulation(s, s, load_relation_fixture("closure_relation_sum.json"));
  EXPECT_FALSE(r.holds());
  EXPECT_FALSE(all_pass(r, ConditionId::h5));
}

TEST(Bisimulation, ExtendedGramIdentityAndNoiseWitness) {
  // R1 A1^k G1 G1^T A1^h^T R1^T = R2 A2^k G2 G2^T A2^h^T R2^T for h, k < n.
  const auto s = load_system_fixture("closure_sys.json");
  const auto rel = load_relation_fixture("closure_relation_b.json");
  const CheckReport r = check_bisimulation(s, s, rel);
  ASSERT_TRUE(r.find(ConditionId::h0)->passed);
  const Index nt = 2 * s.n();
  const Matrix l1 = rel.R1() * reach_matrix(s.A, s.G, nt);
  const Matrix l2 = rel.R2() * reach_matrix(s.A, s.G, nt);
  EXPECT_LT((l1 * l1.transpose() - l2 * l2.transpose()).norm(), 1e-12);
  for (const auto& c : r.conditions) {
    if (c.id == ConditionId::h3 && c.witness) {
      // The witness maps the noise directions: R1 G1 H = R2 G2.
      EXPECT_LT((rel.R1() * s.G * *c.witness - rel.R2() * s.G).norm(), 1e-9);
    }
  }
}

TEST(Hierarchy, SimilarityPairsSatisfyAllThreeChecks) {
  Rng rng(11);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = rng.integer(1, 5);
    const auto s1 = rng.system(n, 1, rng.integer(1, n), 1, rng.uniform(0.4, 1.4));
    const Matrix t = rng.well_conditioned(n);
    const auto s2 = similar(s1, t);
    const LinearRelation graph = LinearRelation::graph(t);
    EXPECT_TRUE(check_linear_equivalence(s1, s2, t).holds()) << trial;
    EXPECT_TRUE(check_bisimulation(s1, s2, graph).holds()) << trial;
    EXPECT_TRUE(check_external_equivalence(s1, s2, graph).holds()) << trial;
  }
}

TEST(Nondegenerate, SelfAndSimilarityPairs) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = rng.integer(1, 4);
    const auto s1 = rng.system(n, 1, n, 1, 0.8);
    EXPECT_TRUE(check_bisim_nondegenerate(s1, s1).holds());
    const Matrix t = rng.well_conditioned(n);
    const auto s2 = similar(s1, t);
    EXPECT_TRUE(check_bisim_nondegenerate(s1, s2).holds()) << trial;
    const Matrix derived = derive_transformation(nondegenerate_relation(s1, s2));
    EXPECT_LT((derived - t).norm(), 1e-8 * t.norm()) << trial;
  }
}

TEST(Nondegenerate, DimensionMismatchIsFalseAndDegenerateIsAnError) {
  const auto s1 = load_system_fixture("example3_sys1.json");
  const auto s2 = load_system_fixture("example3_sys2.json");
  const CheckReport r = check_bisim_nondegenerate(s1, s2);
  EXPECT_EQ(r.verdict, Verdict::kNotEquivalent);
  const auto d = load_system_fixture("example1_sys1.json");
  EXPECT_THROW(check_bisim_nondegenerate(d, d), PreconditionError);
}

TEST(Realization, StableZeroMeanCases) {
  Rng rng(13);
  auto s = rng.system(3, 1, 2, 2, 0.8);
  s.mu.setZero();
  EXPECT_TRUE(check_same_realization(s, s).holds());
  auto t = s;
  t.Psi += Matrix::Identity(2, 2);
  const CheckReport r = check_same_realization(s, t);
  EXPECT_FALSE(r.holds());
  EXPECT_FALSE(r.find(ConditionId::p0)->passed);
  auto unstable = s;
  unstable.A *= 2.0 / spectral_radius(s.A);
  EXPECT_THROW(check_same_realization(unstable, unstable), PreconditionError);
  auto biased = s;
  biased.mu(0) = 1.0;
  EXPECT_THROW(check_same_realization(biased, biased), PreconditionError);
}

}  // namespace
}  // namespace stocheq
