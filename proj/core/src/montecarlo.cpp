#include "stocheq/montecarlo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "feasibility.hpp"
#include "stocheq/errors.hpp"

namespace stocheq {
namespace {

constexpr double kOverflow = 1e300;
constexpr double kPsdClip = 1e-12;
constexpr double kMembershipTol = 1e-8;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 trajectory_engine(std::uint64_t seed, Index k) {
  return std::mt19937_64(
      splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(k)));
}

// Independent stream for the second system of a comparison.
std::uint64_t companion_seed(std::uint64_t seed) {
  return splitmix64(seed ^ 0x5bd1e9955bd1e995ULL);
}

InputSequence resolve_inputs(const StochasticLinearSystem& sys,
                             const InputSequence& u, Index horizon,
                             std::string_view op) {
  if (u.values.empty()) return InputSequence::zeros(sys.m(), horizon);
  if (u.horizon() < horizon) {
    throw DimensionError(std::string(op) + ": input sequence has " +
                         std::to_string(u.horizon()) +
                         " steps, horizon needs " + std::to_string(horizon));
  }
  InputSequence out;
  out.values.assign(u.values.begin(), u.values.begin() + horizon);
  for (const auto& v : out.values) {
    if (v.size() != sys.m()) {
      throw DimensionError(std::string(op) + ": inputs must have length " +
                           std::to_string(sys.m()));
    }
  }
  return out;
}

void require_state(const StochasticLinearSystem& sys, const Vector& x0,
                   std::string_view op) {
  if (x0.size() != sys.n()) {
    throw DimensionError(std::string(op) + ": initial state must have length " +
                         std::to_string(sys.n()) + ", got " +
                         std::to_string(x0.size()));
  }
  require_finite(x0, "initial state");
}

// Membership test for R(box cap support), prepared once per support.
class RelationImage {
 public:
  RelationImage(const LinearRelation& rel, const BoxSet& box,
                const AffineSupport& support, const Tolerance& tol)
      : rel_(rel), box_(box), offset_(support.offset),
        d_(support.directions.basis()) {
    const Matrix r1d = rel.R1() * d_;
    pinv_ = pseudo_inverse(r1d, tol);
    r1d_ = r1d;
    r1_offset_ = rel.R1() * offset_;
    if (d_.cols() > 0) fibre_ = d_ * kernel(r1d, tol).basis();
  }

  [[nodiscard]] bool contains(const Vector& x2) const {
    const Vector target = rel_.R2() * x2;
    const Vector rhs = target - r1_offset_;
    const Vector z0 = pinv_ * rhs;
    const double scale = 1.0 + target.norm() + r1_offset_.norm();
    if ((r1d_ * z0 - rhs).norm() > kMembershipTol * scale) return false;
    const Vector base = offset_ + d_ * z0;
    const double box_slack = kMembershipTol * (1.0 + base.norm());
    if (fibre_.cols() == 0) {
      for (Index i = 0; i < base.size(); ++i) {
        if (base(i) < box_.lower(i) - box_slack ||
            base(i) > box_.upper(i) + box_slack) {
          return false;
        }
      }
      return true;
    }
    // lower <= base + F s <= upper over the fibre coordinates s.
    const Index n = base.size();
    Matrix m(2 * n, fibre_.cols());
    Vector h(2 * n);
    Index rows = 0;
    for (Index i = 0; i < n; ++i) {
      if (std::isfinite(box_.upper(i))) {
        m.row(rows) = fibre_.row(i);
        h(rows++) = box_.upper(i) - base(i);
      }
      if (std::isfinite(box_.lower(i))) {
        m.row(rows) = -fibre_.row(i);
        h(rows++) = base(i) - box_.lower(i);
      }
    }
    return detail::inequalities_feasible(m.topRows(rows), h.head(rows),
                                         box_slack);
  }

 private:
  const LinearRelation& rel_;
  const BoxSet& box_;
  Vector offset_;
  Matrix d_;
  Matrix r1d_;
  Matrix pinv_;
  Vector r1_offset_;
  Matrix fibre_;
};

}  // namespace

void SimulationConfig::validate() const {
  if (trajectories < 1) {
    throw std::invalid_argument("simulation: trajectories must be >= 1");
  }
  if (horizon < 0) throw std::invalid_argument("simulation: horizon must be >= 0");
}

Ensemble::Ensemble(Index trajectories, Index horizon, Index n, Index p)
    : trajectories_(trajectories), horizon_(horizon), n_(n), p_(p),
      states_(static_cast<std::size_t>(trajectories * (horizon + 1) * n)),
      outputs_(static_cast<std::size_t>(trajectories * (horizon + 1) * p)) {}

std::size_t Ensemble::offset(Index k, Index t, Index width) const {
  return static_cast<std::size_t>((k * (horizon_ + 1) + t) * width);
}

Eigen::Map<const Vector> Ensemble::state(Index k, Index t) const {
  return {states_.data() + offset(k, t, n_), n_};
}
Eigen::Map<const Vector> Ensemble::output(Index k, Index t) const {
  return {outputs_.data() + offset(k, t, p_), p_};
}
Eigen::Map<Vector> Ensemble::state(Index k, Index t) {
  return {states_.data() + offset(k, t, n_), n_};
}
Eigen::Map<Vector> Ensemble::output(Index k, Index t) {
  return {outputs_.data() + offset(k, t, p_), p_};
}

bool Ensemble::operator==(const Ensemble& other) const {
  return trajectories_ == other.trajectories_ && horizon_ == other.horizon_ &&
         n_ == other.n_ && p_ == other.p_ && states_ == other.states_ &&
         outputs_ == other.outputs_;
}

Matrix psd_factor(const Matrix& psi) {
  const Index p = psi.rows();
  if (psi.cols() != p) throw DimensionError("psd_factor: matrix must be square");
  if (p == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (psi + psi.transpose()));
  if (es.info() != Eigen::Success) {
    throw NumericalError("psd_factor: eigendecomposition failed");
  }
  Vector ev = es.eigenvalues();
  const double floor = -kPsdClip * std::max(1.0, psi.norm());
  for (Index i = 0; i < p; ++i) {
    if (ev(i) < floor) {
      throw PreconditionError("psd_factor: Psi has eigenvalue " +
                              std::to_string(ev(i)) + " < 0");
    }
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal();
}

Ensemble simulate(const StochasticLinearSystem& sys, const Vector& x0,
                  const InputSequence& u, const SimulationConfig& cfg) {
  cfg.validate();
  require_state(sys, x0, "simulate");
  const InputSequence inputs = resolve_inputs(sys, u, cfg.horizon, "simulate");
  const Matrix psi_factor = psd_factor(sys.Psi);
  const Index p = sys.p();
  const Index l = sys.l();

  Ensemble ens(cfg.trajectories, cfg.horizon, sys.n(), p);
  Vector x(sys.n());
  Vector w(l);
  Vector nu(p);
  for (Index k = 0; k < cfg.trajectories; ++k) {
    auto gen = trajectory_engine(cfg.seed, k);
    std::normal_distribution<double> normal(0.0, 1.0);
    x = x0;
    for (Index t = 0; t <= cfg.horizon; ++t) {
      for (Index i = 0; i < p; ++i) nu(i) = normal(gen);
      ens.state(k, t) = x;
      ens.output(k, t) = sys.C * x + psi_factor * nu;
      if (t == cfg.horizon) break;
      for (Index i = 0; i < l; ++i) w(i) = sys.mu(i) + normal(gen);
      x = sys.A * x + sys.B * inputs.values[static_cast<std::size_t>(t)] +
          sys.G * w;
      if (!(x.cwiseAbs().maxCoeff() <= kOverflow) && x.size() > 0) {
        throw NumericalError("simulate: state exceeds 1e300 at t = " +
                             std::to_string(t + 1) + " in trajectory " +
                             std::to_string(k) + "; horizon too long for an "
                             "unstable system");
      }
    }
  }
  return ens;
}

EmpiricalMoments empirical_moments(const Ensemble& ens) {
  const Index n_samples = ens.trajectories();
  if (n_samples < 2) {
    throw std::invalid_argument("empirical_moments: need at least two "
                                "trajectories");
  }
  const Index horizon = ens.horizon();
  EmpiricalMoments em;
  em.horizon = horizon;
  em.samples = n_samples;
  const auto times = static_cast<std::size_t>(horizon + 1);
  em.state_means.assign(times, Vector::Zero(ens.n()));
  em.output_means.assign(times, Vector::Zero(ens.p()));
  em.state_covs.assign(times, Matrix::Zero(ens.n(), ens.n()));
  em.output_covs.assign(times, Matrix::Zero(ens.p(), ens.p()));
  em.output_lag1_covs.assign(times, Matrix::Zero(ens.p(), ens.p()));
  em.output_lag1_covs[0].resize(0, 0);

  const double inv_n = 1.0 / static_cast<double>(n_samples);
  const double inv_dof = 1.0 / static_cast<double>(n_samples - 1);
  for (Index t = 0; t <= horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    for (Index k = 0; k < n_samples; ++k) {
      em.state_means[i] += ens.state(k, t);
      em.output_means[i] += ens.output(k, t);
    }
    em.state_means[i] *= inv_n;
    em.output_means[i] *= inv_n;
  }
  Vector dx(ens.n());
  Vector dy(ens.p());
  Vector dy_prev(ens.p());
  for (Index t = 0; t <= horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    for (Index k = 0; k < n_samples; ++k) {
      dx = ens.state(k, t) - em.state_means[i];
      dy = ens.output(k, t) - em.output_means[i];
      em.state_covs[i].noalias() += dx * dx.transpose();
      em.output_covs[i].noalias() += dy * dy.transpose();
      if (t > 0) {
        dy_prev = ens.output(k, t - 1) - em.output_means[i - 1];
        em.output_lag1_covs[i].noalias() += dy * dy_prev.transpose();
      }
    }
    em.state_covs[i] *= inv_dof;
    em.output_covs[i] *= inv_dof;
    if (t > 0) em.output_lag1_covs[i] *= inv_dof;
  }
  return em;
}

BoxSet BoxSet::unbounded(Index dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vector::Constant(dim, -inf), Vector::Constant(dim, inf)};
}

bool BoxSet::contains(const Vector& x) const {
  return (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

void BoxSet::validate() const {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("box: lower and upper differ in length");
  }
  for (Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i))) {
      throw std::invalid_argument("box: NaN bound");
    }
    if (lower(i) > upper(i)) {
      throw std::invalid_argument("box: lower > upper in coordinate " +
                                  std::to_string(i));
    }
  }
}

std::vector<const EmpiricalCheck*> EmpiricalReport::failures() const {
  std::vector<const EmpiricalCheck*> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(&c);
  }
  return out;
}

namespace {

EmpiricalCheck gated(std::string label, Index t, double a, double b,
                     double se, double gate) {
  EmpiricalCheck c{std::move(label), t, a - b, se, false};
  const double floor = 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
  c.passed = std::abs(c.difference) <= gate * se + floor;
  return c;
}

std::string index_label(std::string_view what, Index i, Index j) {
  return std::string(what) + "[" + std::to_string(i) + "," +
         std::to_string(j) + "]";
}

}  // namespace

EmpiricalReport compare_output_laws(const StochasticLinearSystem& s1,
                                    const StochasticLinearSystem& s2,
                                    const Vector& x0_1, const Vector& x0_2,
                                    const InputSequence& u,
                                    const SimulationConfig& cfg) {
  if (s1.p() != s2.p() || s1.m() != s2.m()) {
    throw DimensionError("compare_output_laws: systems differ in input or "
                         "output dimension");
  }
  if (cfg.trajectories < 2) {
    throw std::invalid_argument("compare_output_laws: need at least two "
                                "trajectories");
  }
  SimulationConfig cfg2 = cfg;
  cfg2.seed = companion_seed(cfg.seed);
  const EmpiricalMoments e1 = empirical_moments(simulate(s1, x0_1, u, cfg));
  const EmpiricalMoments e2 = empirical_moments(simulate(s2, x0_2, u, cfg2));

  EmpiricalReport rep;
  rep.check = "output-laws";
  rep.gate = kEmpiricalGate;
  rep.samples = cfg.trajectories;
  const double n1 = static_cast<double>(e1.samples);
  const double n2 = static_cast<double>(e2.samples);
  const Index p = s1.p();
  for (Index t = 0; t <= cfg.horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const Matrix& c1 = e1.output_covs[i];
    const Matrix& c2 = e2.output_covs[i];
    for (Index a = 0; a < p; ++a) {
      const double se =
          std::sqrt(std::max(0.0, c1(a, a)) / n1 + std::max(0.0, c2(a, a)) / n2);
      rep.checks.push_back(gated("mean y[" + std::to_string(a) + "]", t,
                                 e1.output_means[i](a), e2.output_means[i](a),
                                 se, rep.gate));
    }
    for (Index a = 0; a < p; ++a) {
      for (Index b = a; b < p; ++b) {
        const double v1 = (std::max(0.0, c1(a, a) * c1(b, b)) +
                           c1(a, b) * c1(a, b)) / n1;
        const double v2 = (std::max(0.0, c2(a, a) * c2(b, b)) +
                           c2(a, b) * c2(a, b)) / n2;
        rep.checks.push_back(gated(index_label("cov y", a, b), t, c1(a, b),
                                   c2(a, b), std::sqrt(v1 + v2), rep.gate));
      }
    }
    if (t == 0) continue;
    const Matrix& l1 = e1.output_lag1_covs[i];
    const Matrix& l2 = e2.output_lag1_covs[i];
    const Matrix& p1 = e1.output_covs[i - 1];
    const Matrix& p2 = e2.output_covs[i - 1];
    for (Index a = 0; a < p; ++a) {
      for (Index b = 0; b < p; ++b) {
        const double v1 =
            (std::max(0.0, c1(a, a) * p1(b, b)) + l1(a, b) * l1(a, b)) / n1;
        const double v2 =
            (std::max(0.0, c2(a, a) * p2(b, b)) + l2(a, b) * l2(a, b)) / n2;
        rep.checks.push_back(gated(index_label("lag1 cov y", a, b), t, l1(a, b),
                                   l2(a, b), std::sqrt(v1 + v2), rep.gate));
      }
    }
  }
  rep.passed = rep.failures().empty();
  return rep;
}

bool in_relation_image(const LinearRelation& rel, const BoxSet& box,
                       const AffineSupport& support, const Vector& x2,
                       const Tolerance& tol) {
  if (box.dim() != rel.n1() || support.offset.size() != rel.n1() ||
      x2.size() != rel.n2()) {
    throw DimensionError("in_relation_image: dimensions do not match the "
                         "relation");
  }
  return RelationImage(rel, box, support, tol).contains(x2);
}

BoxProbabilityReport check_bisim_condition_empirical(
    const StochasticLinearSystem& s1, const StochasticLinearSystem& s2,
    const LinearRelation& rel, const Vector& x0_1, const Vector& x0_2,
    const InputSequence& u, Index t, const BoxSet& box,
    const SimulationConfig& cfg, BisimCondition condition,
    const Tolerance& tol) {
  if (condition == BisimCondition::kBackward) {
    BoxProbabilityReport r = check_bisim_condition_empirical(
        s2, s1, rel.swapped(), x0_2, x0_1, u, t, box, cfg,
        BisimCondition::kForward, tol);
    r.condition = BisimCondition::kBackward;
    return r;
  }
  if (rel.n1() != s1.n() || rel.n2() != s2.n()) {
    throw DimensionError("box test: relation does not match the systems");
  }
  if (!is_total(rel, tol)) {
    throw PreconditionError("box test: relation is not total");
  }
  if (t < 0) throw std::invalid_argument("box test: time must be >= 0");
  box.validate();
  if (box.dim() != s1.n()) {
    throw DimensionError("box test: box has dimension " +
                         std::to_string(box.dim()) + ", state space " +
                         std::to_string(s1.n()));
  }
  require_state(s1, x0_1, "box test");
  require_state(s2, x0_2, "box test");

  SimulationConfig cfg1 = cfg;
  cfg1.horizon = t;
  SimulationConfig cfg2 = cfg1;
  cfg2.seed = companion_seed(cfg.seed);
  const InputSequence inputs = resolve_inputs(s1, u, t, "box test");
  const Ensemble e1 = simulate(s1, x0_1, inputs, cfg1);
  const Ensemble e2 = simulate(s2, x0_2, inputs, cfg2);

  const AffineSupport support = state_support(s1, x0_1, inputs, t, tol);
  const RelationImage target(rel, box, support, tol);

  Index hits1 = 0;
  Index hits2 = 0;
  for (Index k = 0; k < cfg.trajectories; ++k) {
    if (box.contains(e1.state(k, t))) ++hits1;
    if (target.contains(e2.state(k, t))) ++hits2;
  }
  BoxProbabilityReport r;
  r.condition = condition;
  r.t = t;
  r.samples = cfg.trajectories;
  r.support_dim = support.directions.dim();
  const double n = static_cast<double>(cfg.trajectories);
  r.p1 = static_cast<double>(hits1) / n;
  r.p2 = static_cast<double>(hits2) / n;
  r.standard_error =
      std::sqrt(r.p1 * (1.0 - r.p1) / n + r.p2 * (1.0 - r.p2) / n);
  r.passed = r.standard_error > 0.0
                 ? std::abs(r.p1 - r.p2) <= kEmpiricalGate * r.standard_error
                 : r.p1 == r.p2;
  return r;
}

}  // namespace stocheq
