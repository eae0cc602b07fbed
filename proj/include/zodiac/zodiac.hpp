#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "zodiac/estimators.hpp"
#include "zodiac/graph.hpp"
#include "zodiac/problems.hpp"
#include "zodiac/rng.hpp"

namespace zodiac {

// Joint primal/dual state of the network. Column i holds agent i's vectors.
struct NetworkState {
  long long k = 0;
  Eigen::MatrixXd x;  // p x n primal iterates
  Eigen::MatrixXd v;  // p x n dual iterates, all-zero at k = 0

  static NetworkState initial(const Eigen::MatrixXd& x0);
  int p() const { return static_cast<int>(x.rows()); }
  int n() const { return static_cast<int>(x.cols()); }
  Eigen::VectorXd mean_x() const { return x.rowwise().mean(); }
};

enum class ScheduleMode { kManual, kTheoremSchedule };

// Step parameters of the primal-dual update. In kTheoremSchedule mode
// alpha = kappa1 * beta, beta = kappa2 * sqrt(p T / n), eta = kappa2 / beta,
// with the kappa constants recorded for validation and diagnostics.
struct HyperParams {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  ScheduleMode mode = ScheduleMode::kManual;
  double kappa1 = 0.0;  // valid when has_kappa1 (always in schedule mode)
  double kappa2 = 0.0;
  double kappa_delta = 1.0;
  long long T = 0;
  bool has_kappa1 = false;

  static HyperParams manual(double alpha, double beta, double eta);
};

// Largest admissible kappa2 for a given kappa1 on this graph:
//   min{ ((kappa1-1) rho2 - 1) / (rho + (2 kappa1^2 + 1) rho(L^2) + 1), 1/5 }
double kappa2_upper_bound(const LaplacianData& lap, double kappa1);

// Builds the decaying-step parameter set for horizon T. Omitted kappa1
// defaults to 1/rho2 + 1.5, omitted kappa2 to 0.9x its upper bound; supplied
// values outside their (strict) admissible ranges are rejected. T <= n^3/p
// only warns: the bound backs the convergence guarantee, not the mechanics.
HyperParams theorem_schedule(const LaplacianData& lap, int p, int n,
                             long long T,
                             std::optional<double> kappa1 = std::nullopt,
                             std::optional<double> kappa2 = std::nullopt,
                             double kappa_delta = 1.0);

// Independent re-check of the schedule inequalities. Returns false and
// fills `why` (when given) on the first violated condition.
bool validate_schedule(const HyperParams& hp, const LaplacianData& lap, int p,
                       int n, std::string* why = nullptr);

// Per-round bookkeeping the caller may want: the raw estimates that entered
// the update (for gradient-error metrics) and their across-agent mean.
struct StepRecord {
  Eigen::MatrixXd estimates;  // p x n
  Eigen::VectorXd mean_estimate;
};

// One synchronous round: every agent reads its neighbors' iteration-k
// primal values, draws its own estimate from stream (seed, agent, k), then
//   x_i' = x_i - eta (alpha sum_j L_ij x_j + beta v_i + g_i)
//   v_i' = v_i + eta beta sum_j L_ij x_j
// No agent sees another agent's iteration-(k+1) value.
NetworkState zodiac_step(const NetworkState& state, const LaplacianData& lap,
                         const HyperParams& hp, const EstimatorSpec& spec,
                         const StochasticOracle& oracle,
                         std::uint64_t master_seed,
                         StepRecord* record = nullptr);

inline constexpr double kDivergenceLimit = 1e12;

// Empty when the state is healthy; otherwise a one-line diagnostic naming
// the first non-finite or oversized entry.
std::optional<std::string> divergence_reason(const Eigen::MatrixXd& x);

}  // namespace zodiac
