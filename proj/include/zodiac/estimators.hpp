#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "zodiac/problems.hpp"
#include "zodiac/rng.hpp"

namespace zodiac {

enum class EstimatorKind { kCoordForward, kCoordCentral, kGaussianTwoPoint };

// Smoothing-parameter schedule for the finite-difference step.
//   TheoremDecay     delta(k) = kappa_delta / (p n (k+1))^{1/4}
//   FixedExperiment  delta    = 10 / sqrt(T d)
//   Constant         delta    = value
struct DeltaSchedule {
  enum class Mode { kTheoremDecay, kFixedExperiment, kConstant };
  Mode mode = Mode::kConstant;
  double kappa_delta = 1.0;  // TheoremDecay
  double value = 1e-3;       // Constant
  long long T = 0;           // FixedExperiment
  int d = 0;                 // FixedExperiment

  static DeltaSchedule theorem_decay(double kappa_delta);
  static DeltaSchedule fixed_experiment(long long T, int d);
  static DeltaSchedule constant(double value);
};

double delta_at(const DeltaSchedule& schedule, long long k, int p, int n);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::kCoordCentral;
  int n_c = 1;  // coordinate budget; ignored by GaussianTwoPoint
  DeltaSchedule delta;
  double gaussian_mu = 0.01;        // GaussianTwoPoint smoothing
  bool common_randomness = true;    // share xi across the calls of one estimate
};

// Uniform n_c-subset of {0..p-1} without replacement, ascending.
std::vector<int> sample_coordinates(int p, int n_c, Rng& rng);

// Forward differences over the coordinate set (n_c + 1 oracle calls):
//   (p/n_c) * sum_{j in S} (F(x + delta e_j, xi) - F(x, xi)) / delta * e_j
Eigen::VectorXd estimate_forward(const StochasticOracle& oracle, int agent,
                                 const Eigen::VectorXd& x,
                                 std::span<const int> coords, double delta,
                                 Rng& rng, bool common_randomness = true);

// Central differences over the coordinate set (2 n_c oracle calls):
//   (p/n_c) * sum_{j in S} (F(x + delta e_j, xi) - F(x - delta e_j, xi)) / (2 delta) * e_j
Eigen::VectorXd estimate_central(const StochasticOracle& oracle, int agent,
                                 const Eigen::VectorXd& x,
                                 std::span<const int> coords, double delta,
                                 Rng& rng, bool common_randomness = true);

// Gaussian direction u ~ N(0, I): (F(x + mu u, xi) - F(x, xi)) / mu * u
// (2 oracle calls).
Eigen::VectorXd estimate_gaussian_two_point(const StochasticOracle& oracle,
                                            int agent, const Eigen::VectorXd& x,
                                            double mu, Rng& rng,
                                            bool common_randomness = true);

// Draws coordinates and the smoothing step from the spec and dispatches.
Eigen::VectorXd estimate(const EstimatorSpec& spec,
                         const StochasticOracle& oracle, int agent,
                         const Eigen::VectorXd& x, long long k, int n_agents,
                         Rng& rng);

// Oracle calls one estimate consumes.
int oracle_calls_per_estimate(const EstimatorSpec& spec);

// Second-moment bound for the coordinate estimators:
//   2 (p-1) ||grad f||^2 + 2 p sigma1^2
//   + (3 p^2 / n_c) (zeta^2 + L_f^2 delta^2 / 2) + p^2 L_f^2 delta^2 / 2
double variance_bound(double grad_norm_sq, int p, int n_c, double zeta_sq,
                      double sigma1_sq, double L_f, double delta);

}  // namespace zodiac
