#include "stocheq/sysmodel.hpp"

#include <string>

#include <Eigen/Eigenvalues>

#include "stocheq/errors.hpp"

namespace stocheq {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_square(const Matrix& a, std::string_view op) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(op) + ": A must be square, got " +
                         shape(a));
  }
}

}  // namespace

void StochasticLinearSystem::validate(const Tolerance& tol) const {
  const Index nn = A.rows();
  if (A.cols() != nn) throw DimensionError("system: A must be square, got " + shape(A));
  if (B.rows() != nn) throw DimensionError("system: B must have " + std::to_string(nn) + " rows, got " + shape(B));
  if (C.cols() != nn) throw DimensionError("system: C must have " + std::to_string(nn) + " columns, got " + shape(C));
  if (G.rows() != nn) throw DimensionError("system: G must have " + std::to_string(nn) + " rows, got " + shape(G));
  if (mu.size() != G.cols()) {
    throw DimensionError("system: mu must have length l = " +
                         std::to_string(G.cols()) + ", got " +
                         std::to_string(mu.size()));
  }
  if (Psi.rows() != C.rows() || Psi.cols() != C.rows()) {
    throw DimensionError("system: Psi must be " + std::to_string(C.rows()) +
                         "x" + std::to_string(C.rows()) + ", got " +
                         shape(Psi));
  }
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(C, "C");
  require_finite(G, "G");
  require_finite(mu, "mu");
  require_finite(Psi, "Psi");
  if (!matrices_equal(Psi, Psi.transpose(), tol).equal) {
    throw PreconditionError("system: Psi is not symmetric");
  }
  if (Psi.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Psi + Psi.transpose()),
                                             Eigen::EigenvaluesOnly);
    const double floor = -(tol.eq_abs + tol.eq_rel * Psi.norm());
    if (es.eigenvalues().minCoeff() < floor) {
      throw PreconditionError("system: Psi is not positive semi-definite "
                              "(smallest eigenvalue " +
                              std::to_string(es.eigenvalues().minCoeff()) +
                              ")");
    }
  }
}

StochasticLinearSystem make_system(Matrix A, Matrix B, Matrix C, Matrix G,
                                   Vector mu, Matrix Psi,
                                   const Tolerance& tol) {
  StochasticLinearSystem sys{std::move(A), std::move(B), std::move(C),
                             std::move(G), std::move(mu), std::move(Psi), {}};
  if (sys.Psi.rows() == sys.Psi.cols()) {
    sys.Psi = 0.5 * (sys.Psi + sys.Psi.transpose()).eval();
  }
  sys.validate(tol);
  return sys;
}

InputSequence InputSequence::zeros(Index m, Index horizon) {
  InputSequence u;
  u.values.assign(static_cast<std::size_t>(horizon), Vector::Zero(m));
  return u;
}

Matrix reach_matrix(const Matrix& a, const Matrix& m, Index steps) {
  require_square(a, "reach_matrix");
  if (m.rows() != a.rows()) {
    throw DimensionError("reach_matrix: M must have " +
                         std::to_string(a.rows()) + " rows, got " + shape(m));
  }
  if (steps < 1) throw DimensionError("reach_matrix: steps must be >= 1");
  const Index k = m.cols();
  Matrix r(a.rows(), steps * k);
  r.leftCols(k) = m;
  for (Index i = 1; i < steps; ++i) {
    r.middleCols(i * k, k) = a * r.middleCols((i - 1) * k, k);
  }
  return r;
}

Matrix obs_matrix(const Matrix& a, const Matrix& c, Index steps) {
  require_square(a, "obs_matrix");
  if (c.cols() != a.rows()) {
    throw DimensionError("obs_matrix: C must have " +
                         std::to_string(a.rows()) + " columns, got " +
                         shape(c));
  }
  return reach_matrix(a.transpose(), c.transpose(), steps).transpose();
}

Matrix noise_reach_matrix(const StochasticLinearSystem& sys) {
  if (sys.n() == 0) return Matrix(0, 0);
  return reach_matrix(sys.A, sys.G, sys.n());
}

Matrix observability_matrix(const StochasticLinearSystem& sys) {
  if (sys.n() == 0) return Matrix(0, 0);
  return obs_matrix(sys.A, sys.C, sys.n());
}

MomentSequence::MomentSequence(Index horizon, Index n, Index p)
    : horizon_(horizon) {
  const auto times = static_cast<std::size_t>(horizon + 1);
  state_means_.assign(times, Vector::Zero(n));
  output_means_.assign(times, Vector::Zero(p));
  const std::size_t pairs = times * (times + 1) / 2;
  state_covs_.assign(pairs, Matrix::Zero(n, n));
  output_covs_.assign(pairs, Matrix::Zero(p, p));
}

void MomentSequence::check_time(Index t) const {
  if (t < 0 || t > horizon_) {
    throw std::out_of_range("MomentSequence: time " + std::to_string(t) +
                            " outside [0, " + std::to_string(horizon_) + "]");
  }
}

std::size_t MomentSequence::slot(Index t, Index tau) const {
  const auto tt = static_cast<std::size_t>(t);
  return tt * (tt + 1) / 2 + static_cast<std::size_t>(tau);
}

const Vector& MomentSequence::state_mean(Index t) const {
  check_time(t);
  return state_means_[static_cast<std::size_t>(t)];
}

const Vector& MomentSequence::output_mean(Index t) const {
  check_time(t);
  return output_means_[static_cast<std::size_t>(t)];
}

Matrix MomentSequence::state_cov(Index t, Index tau) const {
  check_time(t);
  check_time(tau);
  if (tau <= t) return state_covs_[slot(t, tau)];
  return state_covs_[slot(tau, t)].transpose();
}

Matrix MomentSequence::output_cov(Index t, Index tau) const {
  check_time(t);
  check_time(tau);
  if (tau <= t) return output_covs_[slot(t, tau)];
  return output_covs_[slot(tau, t)].transpose();
}

namespace {

void check_trajectory_args(const StochasticLinearSystem& sys, const Vector& x0,
                           const InputSequence& u, std::string_view op) {
  if (x0.size() != sys.n()) {
    throw DimensionError(std::string(op) + ": x0 must have length " +
                         std::to_string(sys.n()));
  }
  for (const auto& v : u.values) {
    if (v.size() != sys.m()) {
      throw DimensionError(std::string(op) + ": inputs must have length " +
                           std::to_string(sys.m()));
    }
  }
}

}  // namespace

MomentSequence conditional_moments(const StochasticLinearSystem& sys,
                                   const Vector& x0, const InputSequence& u,
                                   OutputNoiseConvention convention) {
  check_trajectory_args(sys, x0, u, "conditional_moments");
  const Index horizon = u.horizon();
  const Index n = sys.n();
  MomentSequence ms(horizon, n, sys.p());

  std::vector<Matrix> powers;
  powers.reserve(static_cast<std::size_t>(horizon + 1));
  powers.push_back(Matrix::Identity(n, n));
  for (Index k = 1; k <= horizon; ++k) powers.push_back(sys.A * powers.back());

  const Vector drift = sys.G * sys.mu;
  Vector x = x0;
  ms.state_means_[0] = x;
  for (Index t = 0; t < horizon; ++t) {
    x = sys.A * x + sys.B * u.values[static_cast<std::size_t>(t)] + drift;
    ms.state_means_[static_cast<std::size_t>(t + 1)] = x;
  }
  for (Index t = 0; t <= horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    ms.output_means_[i] = sys.C * ms.state_means_[i];
  }

  // cov(x(t), x(tau)) = A^{t-tau} * sum_{h<tau} A^h G G^T (A^h)^T.
  const Matrix ggt = sys.G * sys.G.transpose();
  Matrix accumulated = Matrix::Zero(n, n);
  for (Index tau = 0; tau <= horizon; ++tau) {
    if (tau > 0) {
      const Matrix& ph = powers[static_cast<std::size_t>(tau - 1)];
      accumulated += ph * ggt * ph.transpose();
    }
    for (Index t = tau; t <= horizon; ++t) {
      const std::size_t s = ms.slot(t, tau);
      ms.state_covs_[s] =
          powers[static_cast<std::size_t>(t - tau)] * accumulated;
      ms.output_covs_[s] = sys.C * ms.state_covs_[s] * sys.C.transpose();
      if (t == tau || convention == OutputNoiseConvention::kLiteralEveryLag) {
        ms.output_covs_[s] += sys.Psi;
      }
    }
  }
  return ms;
}

Vector conditional_state_mean(const StochasticLinearSystem& sys,
                              const Vector& x0, const InputSequence& u,
                              Index t) {
  check_trajectory_args(sys, x0, u, "conditional_state_mean");
  if (t < 0 || t > u.horizon()) {
    throw DimensionError("conditional_state_mean: time outside input horizon");
  }
  const Vector drift = sys.G * sys.mu;
  Vector x = x0;
  for (Index k = 0; k < t; ++k) {
    x = sys.A * x + sys.B * u.values[static_cast<std::size_t>(k)] + drift;
  }
  return x;
}

AffineSupport state_support(const StochasticLinearSystem& sys, const Vector& x0,
                            const InputSequence& u, Index t,
                            const Tolerance& tol) {
  AffineSupport s{conditional_state_mean(sys, x0, u, t), Subspace(sys.n())};
  if (t >= 1 && sys.n() > 0) {
    s.directions = image(reach_matrix(sys.A, sys.G, t), tol);
  }
  return s;
}

Matrix stationary_state_covariance(const StochasticLinearSystem& sys,
                                   double stability_margin) {
  require_square(sys.A, "stationary_state_covariance");
  const Index n = sys.n();
  if (n == 0) return Matrix(0, 0);
  const double rho = spectral_radius(sys.A);
  if (rho >= 1.0 - stability_margin) {
    throw PreconditionError(
        "stationary_state_covariance: A is not stable (spectral radius " +
        std::to_string(rho) + ")");
  }
  // Doubling form of sum_k A^k G G^T (A^T)^k: after j steps the partial sum
  // covers k < 2^j.
  Matrix p = sys.G * sys.G.transpose();
  Matrix ak = sys.A;
  for (int iter = 0; iter < 200; ++iter) {
    const Matrix increment = ak * p * ak.transpose();
    p += increment;
    ak = (ak * ak).eval();
    if (increment.norm() <= 1e-18 * (1.0 + p.norm()) || ak.norm() == 0.0) {
      break;
    }
  }
  return 0.5 * (p + p.transpose());
}

}  // namespace stocheq
