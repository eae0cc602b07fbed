#include "zodiac/zodiac.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace zodiac {

NetworkState NetworkState::initial(const Eigen::MatrixXd& x0) {
  NetworkState s;
  s.k = 0;
  s.x = x0;
  s.v = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
  return s;
}

HyperParams HyperParams::manual(double alpha, double beta, double eta) {
  if (alpha <= 0.0 || beta <= 0.0 || eta <= 0.0)
    throw std::invalid_argument("HyperParams: alpha, beta, eta must be positive");
  HyperParams hp;
  hp.alpha = alpha;
  hp.beta = beta;
  hp.eta = eta;
  hp.mode = ScheduleMode::kManual;
  return hp;
}

double kappa2_upper_bound(const LaplacianData& lap, double kappa1) {
  if (!lap.connected)
    throw std::invalid_argument("kappa2_upper_bound: graph is disconnected");
  if (kappa1 <= 1.0 / lap.rho2 + 1.0)
    throw std::invalid_argument("kappa2_upper_bound: kappa1 must exceed 1/rho2 + 1");
  const double num = (kappa1 - 1.0) * lap.rho2 - 1.0;
  const double den =
      lap.rho + (2.0 * kappa1 * kappa1 + 1.0) * lap.rho_L2() + 1.0;
  return std::min(num / den, 0.2);
}

HyperParams theorem_schedule(const LaplacianData& lap, int p, int n,
                             long long T, std::optional<double> kappa1,
                             std::optional<double> kappa2,
                             double kappa_delta) {
  if (!lap.connected)
    throw std::invalid_argument("theorem_schedule: graph is disconnected");
  if (lap.n() != n)
    throw std::invalid_argument("theorem_schedule: n does not match the graph");
  if (p <= 0 || T <= 0)
    throw std::invalid_argument("theorem_schedule: p and T must be positive");
  if (kappa_delta <= 0.0)
    throw std::invalid_argument("theorem_schedule: kappa_delta must be positive");

  const double k1_floor = 1.0 / lap.rho2 + 1.0;
  const double k1 = kappa1.value_or(k1_floor + 0.5);
  if (k1 <= k1_floor) {
    std::ostringstream msg;
    msg << "theorem_schedule: kappa1 = " << k1 << " must exceed 1/rho2 + 1 = "
        << k1_floor;
    throw std::invalid_argument(msg.str());
  }
  const double k2_cap = kappa2_upper_bound(lap, k1);
  const double k2 = kappa2.value_or(0.9 * k2_cap);
  if (k2 <= 0.0 || k2 >= k2_cap) {
    std::ostringstream msg;
    msg << "theorem_schedule: kappa2 = " << k2
        << " outside the open interval (0, " << k2_cap << ")";
    throw std::invalid_argument(msg.str());
  }

  const double n_cubed_over_p =
      static_cast<double>(n) * n * n / static_cast<double>(p);
  if (static_cast<double>(T) <= n_cubed_over_p)
    std::cerr << "warning: horizon T = " << T << " does not exceed n^3/p = "
              << n_cubed_over_p
              << "; the schedule is usable but the rate guarantee assumes "
                 "T > n^3/p\n";

  HyperParams hp;
  hp.mode = ScheduleMode::kTheoremSchedule;
  hp.kappa1 = k1;
  hp.kappa2 = k2;
  hp.kappa_delta = kappa_delta;
  hp.T = T;
  hp.has_kappa1 = true;
  hp.beta = k2 * std::sqrt(static_cast<double>(p) * static_cast<double>(T)) /
            std::sqrt(static_cast<double>(n));
  hp.alpha = k1 * hp.beta;
  hp.eta = k2 / hp.beta;
  return hp;
}

bool validate_schedule(const HyperParams& hp, const LaplacianData& lap, int p,
                       int n, std::string* why) {
  auto fail = [&](const std::string& reason) {
    if (why) *why = reason;
    return false;
  };
  if (hp.alpha <= 0.0 || hp.beta <= 0.0 || hp.eta <= 0.0)
    return fail("alpha, beta, eta must all be positive");
  if (hp.mode != ScheduleMode::kTheoremSchedule)
    return fail("not in schedule mode");
  if (!lap.connected) return fail("graph is disconnected");
  if (hp.kappa1 <= 1.0 / lap.rho2 + 1.0)
    return fail("kappa1 <= 1/rho2 + 1");
  const double cap = kappa2_upper_bound(lap, hp.kappa1);
  if (hp.kappa2 <= 0.0 || hp.kappa2 >= cap)
    return fail("kappa2 outside its open interval");
  const double beta_expected =
      hp.kappa2 * std::sqrt(static_cast<double>(p) * static_cast<double>(hp.T)) /
      std::sqrt(static_cast<double>(n));
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b));
  };
  if (!close(hp.beta, beta_expected))
    return fail("beta != kappa2 sqrt(pT)/sqrt(n)");
  if (!close(hp.alpha, hp.kappa1 * hp.beta)) return fail("alpha != kappa1 beta");
  if (!close(hp.eta, hp.kappa2 / hp.beta)) return fail("eta != kappa2 / beta");
  return true;
}

NetworkState zodiac_step(const NetworkState& state, const LaplacianData& lap,
                         const HyperParams& hp, const EstimatorSpec& spec,
                         const StochasticOracle& oracle,
                         std::uint64_t master_seed, StepRecord* record) {
  const int p = state.p();
  const int n = state.n();
  if (lap.n() != n)
    throw std::invalid_argument("zodiac_step: graph size does not match state");
  if (oracle.num_agents() != n)
    throw std::invalid_argument("zodiac_step: oracle agent count mismatch");
  if (oracle.dim() != p)
    throw std::invalid_argument("zodiac_step: oracle dimension mismatch");
  if (state.v.rows() != p || state.v.cols() != n)
    throw std::invalid_argument("zodiac_step: v shape does not match x");
  if (hp.alpha <= 0.0 || hp.beta <= 0.0 || hp.eta <= 0.0)
    throw std::invalid_argument("zodiac_step: hyperparameters must be positive");

  // Gather phase: every agent's Laplacian mix of iteration-k neighbors.
  const Eigen::MatrixXd xL = state.x * lap.L;  // column i = sum_j L_ij x_j

  Eigen::MatrixXd G(p, n);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(master_seed, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(state.k));
    G.col(i) = estimate(spec, oracle, i, state.x.col(i), state.k, n, rng);
  }

  NetworkState next;
  next.k = state.k + 1;
  next.x = state.x - hp.eta * (hp.alpha * xL + hp.beta * state.v + G);
  next.v = state.v + (hp.eta * hp.beta) * xL;

  if (record) {
    record->estimates = std::move(G);
    record->mean_estimate = record->estimates.rowwise().mean();
  }
  return next;
}

std::optional<std::string> divergence_reason(const Eigen::MatrixXd& x) {
  for (int j = 0; j < x.cols(); ++j)
    for (int i = 0; i < x.rows(); ++i) {
      const double value = x(i, j);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite entry " << value << " at coordinate " << i
            << " of agent " << j;
        return msg.str();
      }
      if (std::abs(value) > kDivergenceLimit) {
        std::ostringstream msg;
        msg << "entry " << value << " at coordinate " << i << " of agent " << j
            << " exceeds " << kDivergenceLimit;
        return msg.str();
      }
    }
  return std::nullopt;
}

}  // namespace zodiac
