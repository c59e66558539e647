#pragma once

// Seeded trajectory simulation and empirical checks of equivalence claims.
//
// Trajectory k draws from its own generator seeded by (seed, k), so an
// ensemble does not depend on the order in which trajectories are produced.

#include <cstdint>
#include <string>
#include <vector>

#include "stocheq/numlin.hpp"
#include "stocheq/relations.hpp"
#include "stocheq/sysmodel.hpp"

namespace stocheq {

struct SimulationConfig {
  std::uint64_t seed = 0;
  Index trajectories = 100000;
  Index horizon = 0;

  /// Throws std::invalid_argument unless trajectories >= 1, horizon >= 0.
  void validate() const;
};

/// States x(0..T) and outputs y(0..T) of N trajectories.
class Ensemble {
 public:
  Ensemble(Index trajectories, Index horizon, Index n, Index p);

  [[nodiscard]] Index trajectories() const { return trajectories_; }
  [[nodiscard]] Index horizon() const { return horizon_; }
  [[nodiscard]] Index n() const { return n_; }
  [[nodiscard]] Index p() const { return p_; }

  [[nodiscard]] Eigen::Map<const Vector> state(Index k, Index t) const;
  [[nodiscard]] Eigen::Map<const Vector> output(Index k, Index t) const;
  Eigen::Map<Vector> state(Index k, Index t);
  Eigen::Map<Vector> output(Index k, Index t);

  [[nodiscard]] bool operator==(const Ensemble& other) const;

 private:
  [[nodiscard]] std::size_t offset(Index k, Index t, Index width) const;

  Index trajectories_;
  Index horizon_;
  Index n_;
  Index p_;
  std::vector<double> states_;
  std::vector<double> outputs_;
};

/// Symmetric factor F with F F^T = psi. Eigenvalues down to -1e-12 (scaled
/// by ||psi||) are clipped to zero; anything below throws PreconditionError.
Matrix psd_factor(const Matrix& psi);

/// Simulates x(t+1) = A x + B u + G w, y = C x + nu from x(0) = x0 over
/// cfg.horizon steps. An empty input sequence means u = 0. Throws
/// NumericalError when a value exceeds 1e300 in magnitude.
Ensemble simulate(const StochasticLinearSystem& sys, const Vector& x0,
                  const InputSequence& u, const SimulationConfig& cfg);

struct EmpiricalMoments {
  Index horizon = 0;
  Index samples = 0;
  std::vector<Vector> state_means;
  std::vector<Matrix> state_covs;
  std::vector<Vector> output_means;
  std::vector<Matrix> output_covs;
  /// cov(y(t), y(t-1)) for t >= 1; entry 0 is empty.
  std::vector<Matrix> output_lag1_covs;
};

/// Sample means and unbiased sample covariances. Throws std::invalid_argument
/// for fewer than two trajectories.
EmpiricalMoments empirical_moments(const Ensemble& ensemble);

/// Closed box prod [lower_i, upper_i]; infinite bounds allowed.
struct BoxSet {
  Vector lower;
  Vector upper;

  static BoxSet unbounded(Index dim);
  [[nodiscard]] Index dim() const { return lower.size(); }
  [[nodiscard]] bool contains(const Vector& x) const;
  /// Throws std::invalid_argument on size mismatch, NaN or lower > upper.
  void validate() const;
};

/// One statistic compared across the two ensembles.
struct EmpiricalCheck {
  std::string label;
  Index t = 0;
  double difference = 0.0;
  double standard_error = 0.0;
  bool passed = false;
};

struct EmpiricalReport {
  std::string check;
  bool passed = false;
  double gate = 5.0;  ///< allowed deviation in standard errors
  Index samples = 0;
  std::vector<EmpiricalCheck> checks;
  std::vector<std::string> notes;

  [[nodiscard]] std::vector<const EmpiricalCheck*> failures() const;
};

/// Standard-error gate of the empirical tests.
inline constexpr double kEmpiricalGate = 5.0;

/// Compares output means, covariances and lag-one covariances of the two
/// systems started at x0_1 and x0_2 under the same input, at every t <= T.
EmpiricalReport compare_output_laws(const StochasticLinearSystem& s1,
                                    const StochasticLinearSystem& s2,
                                    const Vector& x0_1, const Vector& x0_2,
                                    const InputSequence& u,
                                    const SimulationConfig& cfg);

/// Which side of the bisimulation condition is tested: forward compares
/// P(x1 in X) with P(x2 in R(X cap supp x1)); backward swaps the systems.
enum class BisimCondition { kForward, kBackward };

/// Whether x2 lies in R(box cap (offset + directions)), i.e. whether some x1
/// in the box and the affine set satisfies R1 x1 = R2 x2.
bool in_relation_image(const LinearRelation& rel, const BoxSet& box,
                       const AffineSupport& support, const Vector& x2,
                       const Tolerance& tol = {});

struct BoxProbabilityReport {
  BisimCondition condition = BisimCondition::kForward;
  Index t = 0;
  double p1 = 0.0;  ///< P(x_from(t) in box)
  double p2 = 0.0;  ///< P(x_to(t) in R(box cap supp x_from(t)))
  double standard_error = 0.0;
  Index samples = 0;
  Index support_dim = 0;
  bool passed = false;
};

/// Estimates both sides of the bisimulation condition at time t for one box.
/// The box lives in the state space of the "from" system (s1 for forward,
/// s2 for backward). Throws PreconditionError for a non-total relation.
BoxProbabilityReport check_bisim_condition_empirical(
    const StochasticLinearSystem& s1, const StochasticLinearSystem& s2,
    const LinearRelation& rel, const Vector& x0_1, const Vector& x0_2,
    const InputSequence& u, Index t, const BoxSet& box,
    const SimulationConfig& cfg,
    BisimCondition condition = BisimCondition::kForward,
    const Tolerance& tol = {});

}  // namespace stocheq
