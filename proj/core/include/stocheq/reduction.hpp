#pragma once

// Quotient systems and minimal reductions.
//
// A relation matrix R with A-invariant kernel induces coordinates z = T^-1 x,
// T = [T1 T2] with im(T2) = ker(R). The first rank(R) coordinates evolve on
// their own and form the quotient system.

#include <string>
#include <vector>

#include "stocheq/numlin.hpp"
#include "stocheq/relations.hpp"
#include "stocheq/sysmodel.hpp"

namespace stocheq {

struct KalmanDecomposition {
  Matrix T;      ///< [T1 T2], n x n, im(T2) = ker(R)
  Matrix T_inv;  ///< inverse of T
  Index reduced_dim = 0;
  Matrix A;  ///< T^-1 A T; the block coupling z2 into z1 is zero
  Matrix B;  ///< T^-1 B
  Matrix C;  ///< C T; the columns acting on z2 are zero
  Matrix G;  ///< T^-1 G; in the bisimulation variant the lower block is zero
  /// Whether the block coupling z1 into z2 was removed as well.
  bool block_diagonal = false;
  /// ||A21||_F / ||A||_F after decoupling.
  double coupling_residual = 0.0;

  [[nodiscard]] Matrix T1() const { return T.leftCols(reduced_dim); }
  [[nodiscard]] Matrix T2() const {
    return T.rightCols(T.cols() - reduced_dim);
  }
};

struct Quotient {
  StochasticLinearSystem reduced;
  KalmanDecomposition decomposition;

  /// Relation between the reduced state z1 and the original state x:
  /// z1 = [I 0] T^-1 x, presented as (I, [I 0] T^-1).
  [[nodiscard]] LinearRelation graph_relation() const;
};

/// Quotient by ker(r_ext). Throws PreconditionError unless ker(r_ext) is
/// A-invariant and contained in ker(C).
Quotient quotient_external(const StochasticLinearSystem& sys,
                           const Matrix& r_ext, const Tolerance& tol = {});

/// Quotient by ker(r_bis) with im(Reach(A, G)) inside im(T1). Throws
/// PreconditionError unless ker(r_bis) is A-invariant, contained in ker(C)
/// and meets im(Reach(A, G)) only in 0.
Quotient quotient_bisim(const StochasticLinearSystem& sys,
                        const Matrix& r_bis, const Tolerance& tol = {});

struct MinimalExternal {
  Quotient quotient;
  LinearRelation relation;  ///< R1 = R2 = Obs_n(A, C)
};

MinimalExternal minimal_external(const StochasticLinearSystem& sys,
                                 const Tolerance& tol = {});

struct EigenspaceRecord {
  EigenvalueCluster eigenvalues;
  Subspace eigenspace;
  bool totally_reachable = false;
  bool totally_unreachable = false;
  bool totally_observable = false;
  bool totally_unobservable = false;

  /// One flag of each pair holds; otherwise the cluster meets the reachable
  /// or unobservable subspace only partially.
  [[nodiscard]] bool separated() const {
    return (totally_reachable || totally_unreachable) &&
           (totally_observable || totally_unobservable);
  }
};

struct EigenspaceClassification {
  Subspace reachable;     ///< im(Reach_n(A, G))
  Subspace unobservable;  ///< ker(Obs_n(A, C))
  std::vector<EigenspaceRecord> clusters;

  [[nodiscard]] bool all_separated() const;
};

EigenspaceClassification classify_eigenspaces(const StochasticLinearSystem& sys,
                                              const Tolerance& tol = {});

enum class BisimMethod {
  /// Every eigenspace is totally (un)reachable and totally (un)observable.
  kSeparated,
  /// Some eigenspace meets the reachable or unobservable subspace partially
  /// and was split into an invariant part avoiding the reachable subspace.
  kDecomposed,
  /// No reduction found.
  kIrreducible,
};

std::string_view to_string(BisimMethod t);

struct ClusterReduction {
  EigenvalueCluster eigenvalues;
  /// Invariant part of the cluster that is factored out.
  Subspace removed;
  /// dim(S cap Q) - dim(S cap Q cap G): an upper bound for dim(removed).
  Index upper_bound = 0;
  bool separated = false;
};

struct BisimCertificate {
  BisimMethod method = BisimMethod::kIrreducible;
  std::vector<ClusterReduction> clusters;
  /// Whether every cluster reached its upper bound, so the relation is the
  /// largest one of this form.
  bool maximal = false;
  /// check_bisimulation(reduced, sys, graph relation) held.
  bool verified = false;
  std::vector<std::string> notes;

  [[nodiscard]] std::string summary() const;
};

struct MinimalBisim {
  Quotient quotient;
  LinearRelation relation;  ///< R1 = R2 with ker = removed subspace
  BisimCertificate certificate;
};

MinimalBisim minimal_bisim(const StochasticLinearSystem& sys,
                           const Tolerance& tol = {});

}  // namespace stocheq
