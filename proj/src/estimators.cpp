#include "zodiac/estimators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace zodiac {

DeltaSchedule DeltaSchedule::theorem_decay(double kappa_delta) {
  if (kappa_delta <= 0.0)
    throw std::invalid_argument("DeltaSchedule: kappa_delta must be positive");
  DeltaSchedule s;
  s.mode = Mode::kTheoremDecay;
  s.kappa_delta = kappa_delta;
  return s;
}

DeltaSchedule DeltaSchedule::fixed_experiment(long long T, int d) {
  if (T <= 0 || d <= 0)
    throw std::invalid_argument("DeltaSchedule: T and d must be positive");
  DeltaSchedule s;
  s.mode = Mode::kFixedExperiment;
  s.T = T;
  s.d = d;
  return s;
}

DeltaSchedule DeltaSchedule::constant(double value) {
  if (value <= 0.0)
    throw std::invalid_argument("DeltaSchedule: value must be positive");
  DeltaSchedule s;
  s.mode = Mode::kConstant;
  s.value = value;
  return s;
}

double delta_at(const DeltaSchedule& schedule, long long k, int p, int n) {
  switch (schedule.mode) {
    case DeltaSchedule::Mode::kTheoremDecay: {
      if (k < 0) throw std::invalid_argument("delta_at: k must be nonnegative");
      if (p <= 0 || n <= 0)
        throw std::invalid_argument("delta_at: p and n must be positive");
      const double base = static_cast<double>(p) * static_cast<double>(n) *
                          static_cast<double>(k + 1);
      return schedule.kappa_delta / std::pow(base, 0.25);
    }
    case DeltaSchedule::Mode::kFixedExperiment:
      return 10.0 / std::sqrt(static_cast<double>(schedule.T) *
                              static_cast<double>(schedule.d));
    case DeltaSchedule::Mode::kConstant:
      return schedule.value;
  }
  throw std::logic_error("delta_at: unknown schedule mode");
}

std::vector<int> sample_coordinates(int p, int n_c, Rng& rng) {
  if (p <= 0) throw std::invalid_argument("sample_coordinates: p must be positive");
  if (n_c < 1 || n_c > p)
    throw std::invalid_argument("sample_coordinates: need 1 <= n_c <= p");
  // Selection sampling: walk the coordinates once, keep each with probability
  // (still needed) / (still available).  Output comes out ascending and the
  // subset is uniform over all n_c-subsets.
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n_c));
  int needed = n_c;
  for (int j = 0; j < p && needed > 0; ++j) {
    std::uniform_int_distribution<int> pick(0, p - j - 1);
    if (pick(rng) < needed) {
      out.push_back(j);
      --needed;
    }
  }
  return out;
}

namespace {

void check_estimate_args(const Eigen::VectorXd& x, std::span<const int> coords,
                         double delta) {
  if (delta <= 0.0)
    throw std::invalid_argument("estimate: delta must be positive");
  if (coords.empty())
    throw std::invalid_argument("estimate: coordinate set is empty");
  for (int j : coords)
    if (j < 0 || j >= x.size())
      throw std::invalid_argument("estimate: coordinate index out of range");
}

}  // namespace

Eigen::VectorXd estimate_forward(const StochasticOracle& oracle, int agent,
                                 const Eigen::VectorXd& x,
                                 std::span<const int> coords, double delta,
                                 Rng& rng, bool common_randomness) {
  check_estimate_args(x, coords, delta);
  const int p = static_cast<int>(x.size());
  Realization xi = oracle.draw(agent, rng);
  const double f0 = oracle.eval(agent, x, xi);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd shifted = x;
  for (int j : coords) {
    if (!common_randomness) xi = oracle.draw(agent, rng);
    shifted(j) = x(j) + delta;
    const double fj = oracle.eval(agent, shifted, xi);
    shifted(j) = x(j);
    g(j) = (fj - f0) / delta;
  }
  g *= static_cast<double>(p) / static_cast<double>(coords.size());
  return g;
}

Eigen::VectorXd estimate_central(const StochasticOracle& oracle, int agent,
                                 const Eigen::VectorXd& x,
                                 std::span<const int> coords, double delta,
                                 Rng& rng, bool common_randomness) {
  check_estimate_args(x, coords, delta);
  const int p = static_cast<int>(x.size());
  Realization xi = oracle.draw(agent, rng);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd shifted = x;
  for (int j : coords) {
    if (!common_randomness) xi = oracle.draw(agent, rng);
    shifted(j) = x(j) + delta;
    const double fp = oracle.eval(agent, shifted, xi);
    if (!common_randomness) xi = oracle.draw(agent, rng);
    shifted(j) = x(j) - delta;
    const double fm = oracle.eval(agent, shifted, xi);
    shifted(j) = x(j);
    g(j) = (fp - fm) / (2.0 * delta);
  }
  g *= static_cast<double>(p) / static_cast<double>(coords.size());
  return g;
}

Eigen::VectorXd estimate_gaussian_two_point(const StochasticOracle& oracle,
                                            int agent, const Eigen::VectorXd& x,
                                            double mu, Rng& rng,
                                            bool common_randomness) {
  if (mu <= 0.0)
    throw std::invalid_argument("estimate_gaussian_two_point: mu must be positive");
  const int p = static_cast<int>(x.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(p);
  for (int j = 0; j < p; ++j) u(j) = gauss(rng);
  Realization xi = oracle.draw(agent, rng);
  const double f0 = oracle.eval(agent, x, xi);
  if (!common_randomness) xi = oracle.draw(agent, rng);
  const double fmu = oracle.eval(agent, x + mu * u, xi);
  return ((fmu - f0) / mu) * u;
}

Eigen::VectorXd estimate(const EstimatorSpec& spec,
                         const StochasticOracle& oracle, int agent,
                         const Eigen::VectorXd& x, long long k, int n_agents,
                         Rng& rng) {
  switch (spec.kind) {
    case EstimatorKind::kCoordForward:
    case EstimatorKind::kCoordCentral: {
      const int p = static_cast<int>(x.size());
      const double delta = delta_at(spec.delta, k, p, n_agents);
      const std::vector<int> coords = sample_coordinates(p, spec.n_c, rng);
      if (spec.kind == EstimatorKind::kCoordForward)
        return estimate_forward(oracle, agent, x, coords, delta, rng,
                                spec.common_randomness);
      return estimate_central(oracle, agent, x, coords, delta, rng,
                              spec.common_randomness);
    }
    case EstimatorKind::kGaussianTwoPoint:
      return estimate_gaussian_two_point(oracle, agent, x, spec.gaussian_mu,
                                         rng, spec.common_randomness);
  }
  throw std::logic_error("estimate: unknown estimator kind");
}

int oracle_calls_per_estimate(const EstimatorSpec& spec) {
  switch (spec.kind) {
    case EstimatorKind::kCoordForward:
      return spec.n_c + 1;
    case EstimatorKind::kCoordCentral:
      return 2 * spec.n_c;
    case EstimatorKind::kGaussianTwoPoint:
      return 2;
  }
  throw std::logic_error("oracle_calls_per_estimate: unknown estimator kind");
}

double variance_bound(double grad_norm_sq, int p, int n_c, double zeta_sq,
                      double sigma1_sq, double L_f, double delta) {
  if (p <= 0 || n_c < 1 || n_c > p)
    throw std::invalid_argument("variance_bound: need p >= 1, 1 <= n_c <= p");
  const double pd = static_cast<double>(p);
  const double d2 = delta * delta;
  return 2.0 * (pd - 1.0) * grad_norm_sq + 2.0 * pd * sigma1_sq +
         (3.0 * pd * pd / static_cast<double>(n_c)) *
             (zeta_sq + L_f * L_f * d2 / 2.0) +
         pd * pd * L_f * L_f * d2 / 2.0;
}

}  // namespace zodiac
