#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "zodiac/estimators.hpp"
#include "zodiac/graph.hpp"
#include "zodiac/problems.hpp"
#include "zodiac/rng.hpp"
#include "zodiac/zodiac.hpp"

namespace zodiac {

// Knobs of the comparison algorithms. Defaults follow the benchmark setup;
// stepsizes without a published value fall back to eta0 = 0.08 and are
// flagged in run metadata.
struct BaselineConfig {
  double mu = 0.01;              // smoothing step (ZO-SGD, ZO-SCD, ZONE-M)
  double eta0 = 0.08;            // base stepsize (ZO-SGD, ZO-SCD, ZO-GDA)
  double decay_exponent = 1e-5;  // ZO-GDA: eta_k = eta0 / k^decay, k from 1
  double rho0 = 0.1;             // ZONE-M: rho_k = rho0 sqrt(k), k from 1
};

// ---- centralized two-point descent --------------------------------------

// x - eta * g with g the Gaussian two-point estimate on the pooled problem
// (oracle with a single agent owning every sample).
Eigen::VectorXd zo_sgd_step(const Eigen::VectorXd& x,
                            const StochasticOracle& pooled, double mu,
                            double eta, Rng& rng,
                            StepRecord* record = nullptr);

// Single uniformly drawn coordinate j, central difference, p/1 rescaling:
// x - eta * p * (F(x + mu e_j) - F(x - mu e_j)) / (2 mu) * e_j.
Eigen::VectorXd zo_scd_step(const Eigen::VectorXd& x,
                            const StochasticOracle& pooled, double mu,
                            double eta, Rng& rng,
                            StepRecord* record = nullptr);

// ---- distributed gradient tracking --------------------------------------

// Symmetric doubly stochastic mixing matrix W = I - L / (rho(L) + 1).
Eigen::MatrixXd gda_mixing_matrix(const LaplacianData& lap);

struct GdaState {
  long long k = 0;
  Eigen::MatrixXd x;  // p x n primal iterates
  Eigen::MatrixXd y;  // p x n tracker of the network-average estimate
  Eigen::MatrixXd g;  // p x n cached estimate of each agent at its current x
};

// y_0 = g_0 = each agent's first estimate at x_0 (streams (seed, agent, 0)).
GdaState zo_gda_init(const Eigen::MatrixXd& x0, const EstimatorSpec& spec,
                     const StochasticOracle& oracle, std::uint64_t master_seed);

// x' = x W - eta_k y, then y' = y W + g(x') - g(x) with fresh estimates at
// the mixed iterates (streams (seed, agent, k+1)).
GdaState zo_gda_step(const GdaState& state, const Eigen::MatrixXd& W,
                     double eta_k, const EstimatorSpec& spec,
                     const StochasticOracle& oracle, std::uint64_t master_seed,
                     StepRecord* record = nullptr);

// ---- ZONE-M --------------------------------------------------------------

struct ZoneState {
  long long k = 0;
  Eigen::MatrixXd x;   // p x n primal iterates
  Eigen::MatrixXd mu;  // p x n nodal dual variables, zero at k = 0
};

ZoneState zone_m_init(const Eigen::MatrixXd& x0);

// Method-of-multipliers round with penalty rho_k and one Gaussian two-point
// sample per agent (J = 1). The primal update is the proximal step of the
// linearized augmented Lagrangian with proximal weight matrix D + Adj, under
// which L + (D + Adj) = 2D is diagonal and the argmin is closed-form:
//   x_i' = [rho_k (d_i x_i + sum_{j in N_i} w_ij x_j) - G_i - mu_i] / (2 rho_k d_i)
//   mu_i' = mu_i + rho_k sum_j L_ij x_j'
// Isolated nodes (degree 0) use an identity proximal row instead, which for
// n = 1 reduces the round to x' = x - G / rho_k.
ZoneState zone_m_step(const ZoneState& state, const LaplacianData& lap,
                      double rho_k, double mu_smooth,
                      const StochasticOracle& oracle, std::uint64_t master_seed,
                      StepRecord* record = nullptr);

}  // namespace zodiac
