// Generalized real eigenspaces via a reordered real Schur form.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "stocheq/errors.hpp"
#include "stocheq/numlin.hpp"

namespace stocheq {
namespace {

using Complex = std::complex<double>;

struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

bool close(Complex a, Complex b, double rel) {
  return std::abs(a - b) <=
         rel * (1.0 + std::max(std::abs(a), std::abs(b)));
}

// Index groups of conjugate-closed eigenvalue clusters, deterministically
// ordered.
std::vector<std::vector<std::size_t>> cluster_indices(
    const std::vector<Complex>& eig, const Tolerance& tol) {
  const std::size_t n = eig.size();
  DisjointSet ds(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (close(eig[i], eig[j], tol.cluster_rel) ||
          close(eig[i], std::conj(eig[j]), tol.cluster_rel)) {
        ds.join(i, j);
      }
    }
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = ds.find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[root])].push_back(i);
  }
  auto key = [&](const std::vector<std::size_t>& g) {
    double modulus = 0.0;
    double re = 0.0;
    for (auto i : g) {
      modulus = std::max(modulus, std::abs(eig[i]));
      re += eig[i].real();
    }
    return std::pair{modulus, re / static_cast<double>(g.size())};
  };
  std::stable_sort(groups.begin(), groups.end(),
                   [&](const auto& a, const auto& b) {
                     const auto ka = key(a);
                     const auto kb = key(b);
                     if (ka.first != kb.first) return ka.first > kb.first;
                     return ka.second > kb.second;
                   });
  return groups;
}

EigenvalueCluster sorted_values(const std::vector<Complex>& eig,
                                const std::vector<std::size_t>& group) {
  EigenvalueCluster values;
  values.reserve(group.size());
  for (auto i : group) values.push_back(eig[i]);
  std::sort(values.begin(), values.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return values;
}

}  // namespace

std::vector<EigenvalueCluster> cluster_eigenvalues(
    const std::vector<Complex>& eigenvalues, const Tolerance& tol) {
  std::vector<EigenvalueCluster> out;
  for (const auto& g : cluster_indices(eigenvalues, tol)) {
    out.push_back(sorted_values(eigenvalues, g));
  }
  return out;
}

std::vector<InvariantEigenspace> real_invariant_eigenspaces(
    const Matrix& a, const Tolerance& tol) {
  if (a.rows() != a.cols()) {
    throw DimensionError("real_invariant_eigenspaces: matrix must be square");
  }
  require_finite(a, "real_invariant_eigenspaces input");
  const auto n = static_cast<lapack_int>(a.rows());
  if (n == 0) return {};

  // Column-major copies; Eigen's default storage matches LAPACK.
  Matrix schur = a;
  Matrix vectors(n, n);
  std::vector<double> wr(n), wi(n);
  lapack_int sdim = 0;
  lapack_int info =
      LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, schur.data(), n,
                    &sdim, wr.data(), wi.data(), vectors.data(), n);
  if (info != 0) {
    throw NumericalError("real_invariant_eigenspaces: real Schur iteration "
                         "failed to converge (dgees info " +
                         std::to_string(info) + ")");
  }

  std::vector<Complex> eig(static_cast<std::size_t>(n));
  for (lapack_int i = 0; i < n; ++i) eig[i] = Complex(wr[i], wi[i]);

  std::vector<InvariantEigenspace> out;
  for (const auto& group : cluster_indices(eig, tol)) {
    std::vector<lapack_logical> select(static_cast<std::size_t>(n), 0);
    for (auto i : group) select[i] = 1;

    Matrix t = schur;
    Matrix q = vectors;
    std::vector<double> wr2(n), wi2(n);
    lapack_int m = 0;
    double s = 0.0;
    double sep = 0.0;
    // Explicit workspace: the high-level wrapper under-allocates for job 'N'
    // with some LAPACK builds.
    const lapack_int lwork = std::max<lapack_int>(1, n * n);
    std::vector<double> work(static_cast<std::size_t>(lwork));
    std::vector<lapack_int> iwork(static_cast<std::size_t>(lwork));
    info = LAPACKE_dtrsen_work(LAPACK_COL_MAJOR, 'N', 'V', select.data(), n,
                               t.data(), n, q.data(), n, wr2.data(),
                               wi2.data(), &m, &s, &sep, work.data(), lwork,
                               iwork.data(), lwork);
    if (info != 0) {
      throw NumericalError("real_invariant_eigenspaces: Schur reordering "
                           "failed (dtrsen info " +
                           std::to_string(info) +
                           "); eigenvalue clusters too close to separate");
    }
    if (m != static_cast<lapack_int>(group.size())) {
      throw NumericalError(
          "real_invariant_eigenspaces: reordering selected " +
          std::to_string(m) + " eigenvalues for a cluster of " +
          std::to_string(group.size()));
    }
    out.push_back({sorted_values(eig, group),
                   Subspace::from_orthonormal(q.leftCols(m))});
  }
  return out;
}

}  // namespace stocheq
