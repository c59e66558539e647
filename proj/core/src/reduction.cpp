#include "stocheq/reduction.hpp"

#include <string>

#include <Eigen/LU>

#include "stocheq/equivalence.hpp"
#include "stocheq/errors.hpp"

namespace stocheq {
namespace {

constexpr double kCouplingTol = 1e-8;
// Decoupling is skipped when it would blow up the transformation.
constexpr double kMaxDecouplingGain = 1e8;

double relative_block(const Matrix& block, const Matrix& whole) {
  const double scale = whole.norm();
  if (block.size() == 0) return 0.0;
  return scale > 0.0 ? block.norm() / scale : block.norm();
}

void fill_transformed(const StochasticLinearSystem& sys,
                      KalmanDecomposition& d) {
  d.A = d.T_inv * sys.A * d.T;
  d.B = d.T_inv * sys.B;
  d.C = sys.C * d.T;
  d.G = d.T_inv * sys.G;
  const Index r = d.reduced_dim;
  const Index k = sys.n() - r;
  d.coupling_residual = relative_block(d.A.bottomLeftCorner(k, r), d.A);
  d.block_diagonal = d.coupling_residual <= kCouplingTol;
}

// Replaces T1 by T1 + T2 X with A22 X - X A11 + A21 = 0 so that the
// transformed A becomes block diagonal. Requires separated spectra.
void decouple(const StochasticLinearSystem& sys, KalmanDecomposition& d,
              const Tolerance& tol) {
  const Index r = d.reduced_dim;
  const Index k = sys.n() - r;
  if (r == 0 || k == 0 || d.block_diagonal) return;
  const Matrix a11 = d.A.topLeftCorner(r, r);
  const Matrix a22 = d.A.bottomRightCorner(k, k);
  const Matrix a21 = d.A.bottomLeftCorner(k, r);

  Matrix kron = Matrix::Zero(r * k, r * k);
  for (Index j = 0; j < r; ++j) {
    kron.block(j * k, j * k, k, k) += a22;
    for (Index i = 0; i < r; ++i) {
      kron.block(j * k, i * k, k, k) -=
          a11(i, j) * Matrix::Identity(k, k);
    }
  }
  if (rank(kron, tol) < r * k) return;
  const Vector rhs = -Eigen::Map<const Vector>(a21.data(), r * k);
  const Vector vec_x = kron.fullPivLu().solve(rhs);
  const Matrix x = Eigen::Map<const Matrix>(vec_x.data(), k, r);
  if (!x.allFinite() || x.norm() > kMaxDecouplingGain) return;

  Matrix shear = Matrix::Identity(sys.n(), sys.n());
  shear.bottomLeftCorner(k, r) = x;
  Matrix shear_inv = Matrix::Identity(sys.n(), sys.n());
  shear_inv.bottomLeftCorner(k, r) = -x;
  KalmanDecomposition candidate = d;
  candidate.T = d.T * shear;
  candidate.T_inv = shear_inv * d.T_inv;
  fill_transformed(sys, candidate);
  if (candidate.coupling_residual < d.coupling_residual) d = candidate;
}

KalmanDecomposition build_decomposition(const StochasticLinearSystem& sys,
                                        const Matrix& t1, const Matrix& t2,
                                        const Tolerance& tol) {
  KalmanDecomposition d;
  const Index n = sys.n();
  d.reduced_dim = t1.cols();
  d.T.resize(n, n);
  d.T << t1, t2;
  if (n > 0) {
    Eigen::FullPivLU<Matrix> lu(d.T);
    if (!lu.isInvertible()) {
      throw NumericalError("quotient: coordinate change is singular");
    }
    d.T_inv = lu.inverse();
  } else {
    d.T_inv = Matrix(0, 0);
  }
  fill_transformed(sys, d);
  decouple(sys, d, tol);
  return d;
}

StochasticLinearSystem reduced_system(const StochasticLinearSystem& sys,
                                      const KalmanDecomposition& d,
                                      std::string_view suffix) {
  const Index r = d.reduced_dim;
  StochasticLinearSystem red;
  red.A = d.A.topLeftCorner(r, r);
  red.B = d.B.topRows(r);
  red.C = d.C.leftCols(r);
  red.G = d.G.topRows(r);
  red.mu = sys.mu;
  red.Psi = sys.Psi;
  red.name = sys.name.empty() ? std::string(suffix)
                              : sys.name + "/" + std::string(suffix);
  return red;
}

Subspace checked_kernel(const StochasticLinearSystem& sys, const Matrix& r,
                        const Tolerance& tol, std::string_view op) {
  if (r.cols() != sys.n()) {
    throw DimensionError(std::string(op) + ": relation matrix must have " +
                         std::to_string(sys.n()) + " columns, got " +
                         std::to_string(r.cols()));
  }
  require_finite(r, "relation matrix");
  const Subspace k = kernel(r, tol);
  if (!is_invariant(sys.A, k, tol)) {
    throw PreconditionError(std::string(op) +
                            ": A ker(R) is not contained in ker(R)");
  }
  if (!is_contained(k, kernel(sys.C, tol), tol)) {
    throw PreconditionError(std::string(op) +
                            ": ker(R) is not contained in ker(C)");
  }
  return k;
}

Subspace noise_reachable(const StochasticLinearSystem& sys,
                         const Tolerance& tol) {
  if (sys.n() == 0) return Subspace(0);
  return image(noise_reach_matrix(sys), tol);
}

Quotient identity_quotient(const StochasticLinearSystem& sys) {
  Quotient q;
  KalmanDecomposition& d = q.decomposition;
  const Index n = sys.n();
  d.T = Matrix::Identity(n, n);
  d.T_inv = Matrix::Identity(n, n);
  d.reduced_dim = n;
  d.A = sys.A;
  d.B = sys.B;
  d.C = sys.C;
  d.G = sys.G;
  d.block_diagonal = true;
  q.reduced = sys;
  return q;
}

}  // namespace

LinearRelation Quotient::graph_relation() const {
  const Index r = decomposition.reduced_dim;
  return {Matrix::Identity(r, r), decomposition.T_inv.topRows(r)};
}

Quotient quotient_external(const StochasticLinearSystem& sys,
                           const Matrix& r_ext, const Tolerance& tol) {
  const Subspace k = checked_kernel(sys, r_ext, tol, "quotient_external");
  Quotient q;
  q.decomposition = build_decomposition(
      sys, orthogonal_complement(k).basis(), k.basis(), tol);
  q.reduced = reduced_system(sys, q.decomposition, "ext-quotient");
  return q;
}

Quotient quotient_bisim(const StochasticLinearSystem& sys, const Matrix& r_bis,
                        const Tolerance& tol) {
  const Subspace k = checked_kernel(sys, r_bis, tol, "quotient_bisim");
  const Subspace reach = noise_reachable(sys, tol);
  if (!intersect(k, reach, tol).is_zero()) {
    throw PreconditionError(
        "quotient_bisim: ker(R) meets im(Reach(A, G)) outside 0");
  }
  const Subspace rest = orthogonal_complement(sum(reach, k, tol));
  Matrix t1(sys.n(), reach.dim() + rest.dim());
  t1 << reach.basis(), rest.basis();
  if (t1.cols() + k.dim() != sys.n()) {
    throw NumericalError("quotient_bisim: im(Reach) + ker(R) + complement "
                         "does not span the state space");
  }
  Quotient q;
  q.decomposition = build_decomposition(sys, t1, k.basis(), tol);
  q.reduced = reduced_system(sys, q.decomposition, "bisim-quotient");
  return q;
}

MinimalExternal minimal_external(const StochasticLinearSystem& sys,
                                 const Tolerance& tol) {
  if (sys.n() == 0) {
    return {identity_quotient(sys), LinearRelation::identity(0)};
  }
  const Matrix obs = observability_matrix(sys);
  return {quotient_external(sys, obs, tol), LinearRelation(obs, obs)};
}

bool EigenspaceClassification::all_separated() const {
  for (const auto& c : clusters) {
    if (!c.separated()) return false;
  }
  return true;
}

EigenspaceClassification classify_eigenspaces(const StochasticLinearSystem& sys,
                                              const Tolerance& tol) {
  EigenspaceClassification out;
  const Index n = sys.n();
  out.reachable = noise_reachable(sys, tol);
  out.unobservable =
      n == 0 ? Subspace(0) : kernel(observability_matrix(sys), tol);
  if (n == 0) return out;
  for (auto& es : real_invariant_eigenspaces(sys.A, tol)) {
    EigenspaceRecord rec;
    rec.eigenvalues = std::move(es.eigenvalues);
    rec.eigenspace = std::move(es.eigenspace);
    rec.totally_reachable = is_contained(rec.eigenspace, out.reachable, tol);
    rec.totally_unreachable =
        intersect(rec.eigenspace, out.reachable, tol).is_zero();
    rec.totally_unobservable =
        is_contained(rec.eigenspace, out.unobservable, tol);
    rec.totally_observable =
        intersect(rec.eigenspace, out.unobservable, tol).is_zero();
    out.clusters.push_back(std::move(rec));
  }
  return out;
}

std::string_view to_string(BisimMethod t) {
  switch (t) {
    case BisimMethod::kSeparated: return "separated-eigenspaces";
    case BisimMethod::kDecomposed: return "decomposed-eigenspaces";
    case BisimMethod::kIrreducible: return "irreducible";
  }
  return "?";
}

std::string BisimCertificate::summary() const {
  std::string s;
  switch (method) {
    case BisimMethod::kSeparated:
      s = "every eigenspace is totally reachable or unreachable and totally "
          "observable or unobservable; factored out the unreachable and "
          "unobservable eigenspaces";
      break;
    case BisimMethod::kDecomposed:
      s = "some eigenspaces meet the reachable or unobservable subspace "
          "partially; factored out their invariant unobservable parts that "
          "avoid the reachable subspace";
      break;
    case BisimMethod::kIrreducible:
      s = "irreducible under the eigenspace hypotheses";
      break;
  }
  s += maximal ? " (maximal)" : " (maximality not certified)";
  return s;
}

namespace {

// Largest A-invariant subspace of v (itself invariant) meeting w = v cap G only
// in 0, built greedily from Krylov subspaces of candidate directions.
Subspace invariant_part_avoiding(const Matrix& a, const Subspace& v,
                                 const Subspace& w, Index bound,
                                 const Tolerance& tol) {
  Subspace u(v.ambient_dim());
  if (bound == 0) return u;
  std::vector<Vector> candidates;
  const Subspace coords = kernel(w.basis().transpose() * v.basis(), tol);
  const Matrix outside = v.basis() * coords.basis();
  for (Index j = 0; j < outside.cols(); ++j) candidates.push_back(outside.col(j));
  for (Index j = 0; j < v.dim(); ++j) candidates.push_back(v.basis().col(j));

  for (const auto& c : candidates) {
    if (u.dim() >= bound) break;
    const Subspace krylov = image(reach_matrix(a, c, v.dim()), tol);
    const Subspace grown = sum(u, krylov, tol);
    if (grown.dim() == u.dim()) continue;
    if (!intersect(grown, w, tol).is_zero()) continue;
    u = grown;
  }
  return u;
}

}  // namespace

MinimalBisim minimal_bisim(const StochasticLinearSystem& sys,
                           const Tolerance& tol) {
  const Index n = sys.n();
  const EigenspaceClassification cls = classify_eigenspaces(sys, tol);
  BisimCertificate cert;
  Subspace removed(n);
  bool maximal = true;
  bool partial = false;

  for (const auto& rec : cls.clusters) {
    ClusterReduction cr;
    cr.eigenvalues = rec.eigenvalues;
    cr.separated = rec.separated();
    partial = partial || !cr.separated;
    const Subspace v = intersect(rec.eigenspace, cls.unobservable, tol);
    const Subspace w = intersect(v, cls.reachable, tol);
    cr.upper_bound = v.dim() - w.dim();
    cr.removed = invariant_part_avoiding(sys.A, v, w, cr.upper_bound, tol);
    if (cr.removed.dim() < cr.upper_bound) maximal = false;
    removed = sum(removed, cr.removed, tol);
    cert.clusters.push_back(std::move(cr));
  }
  cert.maximal = maximal;

  auto irreducible = [&](std::string note) {
    cert.method = BisimMethod::kIrreducible;
    if (!note.empty()) cert.notes.push_back(std::move(note));
    MinimalBisim out{identity_quotient(sys), LinearRelation::identity(n),
                     std::move(cert)};
    out.certificate.verified = true;
    return out;
  };

  if (removed.is_zero()) return irreducible({});

  const Matrix r = orthogonal_complement(removed).basis().transpose();
  Quotient q;
  try {
    q = quotient_bisim(sys, r, tol);
  } catch (const PreconditionError& e) {
    cert.maximal = false;
    return irreducible(std::string("quotient rejected: ") + e.what());
  }
  const CheckReport check =
      check_bisimulation(q.reduced, sys, q.graph_relation(), tol);
  if (!check.holds()) {
    cert.maximal = false;
    return irreducible("quotient failed the bisimulation check");
  }
  cert.method = partial ? BisimMethod::kDecomposed : BisimMethod::kSeparated;
  cert.verified = true;
  return {std::move(q), LinearRelation(r, r), std::move(cert)};
}

}  // namespace stocheq
