#pragma once

// Discrete-time stochastic linear control system
//
//   x(t+1) = A x(t) + B u(t) + G w(t),   w(t) ~ N(mu, I)
//   y(t)   = C x(t) + nu(t),             nu(t) ~ N(0, Psi)
//
// and the exact conditional moments / supports of its state and output
// processes.

#include <string>
#include <vector>

#include "stocheq/numlin.hpp"

namespace stocheq {

struct StochasticLinearSystem {
  Matrix A;    ///< n x n
  Matrix B;    ///< n x m
  Matrix C;    ///< p x n
  Matrix G;    ///< n x l
  Vector mu;   ///< l, disturbance mean
  Matrix Psi;  ///< p x p, output-noise covariance
  std::string name;

  [[nodiscard]] Index n() const { return A.rows(); }
  [[nodiscard]] Index m() const { return B.cols(); }
  [[nodiscard]] Index p() const { return C.rows(); }
  [[nodiscard]] Index l() const { return G.cols(); }

  /// Throws DimensionError on inconsistent shapes, std::invalid_argument on
  /// non-finite data, PreconditionError when Psi is not symmetric PSD.
  void validate(const Tolerance& tol = {}) const;
};

/// Builds a validated system; Psi is symmetrized first.
StochasticLinearSystem make_system(Matrix A, Matrix B, Matrix C, Matrix G,
                                   Vector mu, Matrix Psi,
                                   const Tolerance& tol = {});

struct InputSequence {
  std::vector<Vector> values;  ///< u(0), ..., u(T-1)

  [[nodiscard]] Index horizon() const {
    return static_cast<Index>(values.size());
  }
  static InputSequence zeros(Index m, Index horizon);
};

/// Reach_t(A, M) = [M, A M, ..., A^{t-1} M].
Matrix reach_matrix(const Matrix& a, const Matrix& m, Index steps);
/// Obs_t(A, C) = [C; C A; ...; C A^{t-1}] = Reach_t(A^T, C^T)^T.
Matrix obs_matrix(const Matrix& a, const Matrix& c, Index steps);

/// Reach_n(A, G) of the system.
Matrix noise_reach_matrix(const StochasticLinearSystem& sys);
/// Obs_n(A, C) of the system.
Matrix observability_matrix(const StochasticLinearSystem& sys);

/// How the output-noise covariance enters cov(y(t), y(tau)).
enum class OutputNoiseConvention {
  kWhite,           ///< Psi only at t == tau (nu is white)
  kLiteralEveryLag  ///< Psi added for every (t, tau), diagnostic only
};

class MomentSequence {
 public:
  MomentSequence(Index horizon, Index n, Index p);

  [[nodiscard]] Index horizon() const { return horizon_; }
  [[nodiscard]] const Vector& state_mean(Index t) const;
  [[nodiscard]] const Vector& output_mean(Index t) const;
  /// cov(x(t), x(tau)) for any 0 <= t, tau <= horizon.
  [[nodiscard]] Matrix state_cov(Index t, Index tau) const;
  [[nodiscard]] Matrix output_cov(Index t, Index tau) const;

 private:
  friend MomentSequence conditional_moments(const StochasticLinearSystem&,
                                            const Vector&,
                                            const InputSequence&,
                                            OutputNoiseConvention);
  [[nodiscard]] std::size_t slot(Index t, Index tau) const;
  void check_time(Index t) const;

  Index horizon_;
  std::vector<Vector> state_means_;
  std::vector<Vector> output_means_;
  std::vector<Matrix> state_covs_;   // lower triangle tau <= t
  std::vector<Matrix> output_covs_;  // lower triangle tau <= t
};

/// Conditional means and covariances of x and y given x(0) = x0 and the
/// deterministic input u over horizon u.horizon().
MomentSequence conditional_moments(
    const StochasticLinearSystem& sys, const Vector& x0, const InputSequence& u,
    OutputNoiseConvention convention = OutputNoiseConvention::kWhite);

/// E[x(t) | x0] = A^t x0 + sum_{tau<t} A^{t-1-tau} (B u(tau) + G mu).
Vector conditional_state_mean(const StochasticLinearSystem& sys,
                              const Vector& x0, const InputSequence& u,
                              Index t);

/// supp(x(t) | x0) = offset + directions.
struct AffineSupport {
  Vector offset;
  Subspace directions;
};

AffineSupport state_support(const StochasticLinearSystem& sys, const Vector& x0,
                            const InputSequence& u, Index t,
                            const Tolerance& tol = {});

/// Solution of Psi_x = A Psi_x A^T + G G^T for a Schur-stable A. Throws
/// PreconditionError when the spectral radius is >= 1 - stability_margin.
Matrix stationary_state_covariance(const StochasticLinearSystem& sys,
                                   double stability_margin = 1e-10);

}  // namespace stocheq
