#include "zodiac/baselines.hpp"

#include <stdexcept>

namespace zodiac {

namespace {

void fill_record(StepRecord* record, Eigen::MatrixXd estimates) {
  if (!record) return;
  record->estimates = std::move(estimates);
  record->mean_estimate = record->estimates.rowwise().mean();
}

}  // namespace

Eigen::VectorXd zo_sgd_step(const Eigen::VectorXd& x,
                            const StochasticOracle& pooled, double mu,
                            double eta, Rng& rng, StepRecord* record) {
  if (mu <= 0.0 || eta <= 0.0)
    throw std::invalid_argument("zo_sgd_step: mu and eta must be positive");
  const Eigen::VectorXd g =
      estimate_gaussian_two_point(pooled, 0, x, mu, rng);
  fill_record(record, g);
  return x - eta * g;
}

Eigen::VectorXd zo_scd_step(const Eigen::VectorXd& x,
                            const StochasticOracle& pooled, double mu,
                            double eta, Rng& rng, StepRecord* record) {
  if (mu <= 0.0 || eta <= 0.0)
    throw std::invalid_argument("zo_scd_step: mu and eta must be positive");
  const int p = static_cast<int>(x.size());
  const std::vector<int> coord = sample_coordinates(p, 1, rng);
  const Eigen::VectorXd g = estimate_central(pooled, 0, x, coord, mu, rng);
  fill_record(record, g);
  return x - eta * g;
}

Eigen::MatrixXd gda_mixing_matrix(const LaplacianData& lap) {
  const int n = lap.n();
  return Eigen::MatrixXd::Identity(n, n) - lap.L / (lap.rho + 1.0);
}

GdaState zo_gda_init(const Eigen::MatrixXd& x0, const EstimatorSpec& spec,
                     const StochasticOracle& oracle,
                     std::uint64_t master_seed) {
  const int p = static_cast<int>(x0.rows());
  const int n = static_cast<int>(x0.cols());
  if (oracle.num_agents() != n || oracle.dim() != p)
    throw std::invalid_argument("zo_gda_init: oracle shape mismatch");
  GdaState s;
  s.k = 0;
  s.x = x0;
  s.g.resize(p, n);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(master_seed, static_cast<std::uint64_t>(i), 0);
    s.g.col(i) = estimate(spec, oracle, i, x0.col(i), 0, n, rng);
  }
  s.y = s.g;
  return s;
}

GdaState zo_gda_step(const GdaState& state, const Eigen::MatrixXd& W,
                     double eta_k, const EstimatorSpec& spec,
                     const StochasticOracle& oracle, std::uint64_t master_seed,
                     StepRecord* record) {
  if (eta_k <= 0.0)
    throw std::invalid_argument("zo_gda_step: eta_k must be positive");
  const int n = static_cast<int>(state.x.cols());
  if (W.rows() != n || W.cols() != n)
    throw std::invalid_argument("zo_gda_step: mixing matrix size mismatch");

  GdaState next;
  next.k = state.k + 1;
  next.x = state.x * W - eta_k * state.y;
  next.g.resizeLike(state.g);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(master_seed, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(next.k));
    next.g.col(i) = estimate(spec, oracle, i, next.x.col(i), next.k, n, rng);
  }
  next.y = state.y * W + next.g - state.g;
  fill_record(record, next.g);
  return next;
}

ZoneState zone_m_init(const Eigen::MatrixXd& x0) {
  ZoneState s;
  s.k = 0;
  s.x = x0;
  s.mu = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
  return s;
}

ZoneState zone_m_step(const ZoneState& state, const LaplacianData& lap,
                      double rho_k, double mu_smooth,
                      const StochasticOracle& oracle, std::uint64_t master_seed,
                      StepRecord* record) {
  if (rho_k <= 0.0)
    throw std::invalid_argument("zone_m_step: rho_k must be positive");
  const int p = static_cast<int>(state.x.rows());
  const int n = static_cast<int>(state.x.cols());
  if (lap.n() != n)
    throw std::invalid_argument("zone_m_step: graph size mismatch");
  if (oracle.num_agents() != n || oracle.dim() != p)
    throw std::invalid_argument("zone_m_step: oracle shape mismatch");

  Eigen::MatrixXd G(p, n);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(master_seed, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(state.k));
    G.col(i) = estimate_gaussian_two_point(oracle, i, state.x.col(i), mu_smooth,
                                           rng);
  }

  // (D + Adj) x per agent: column i of X (2D - L) since Adj = D - L.
  const Eigen::VectorXd degrees = lap.L.diagonal();
  Eigen::MatrixXd mixed =
      2.0 * (state.x * degrees.asDiagonal()) - state.x * lap.L;

  ZoneState next;
  next.k = state.k + 1;
  next.x.resize(p, n);
  for (int i = 0; i < n; ++i) {
    const double d = degrees(i);
    if (d > 0.0) {
      next.x.col(i) = (rho_k * mixed.col(i) - G.col(i) - state.mu.col(i)) /
                      (2.0 * rho_k * d);
    } else {
      // Isolated node: identity proximal row, plain proximal descent.
      next.x.col(i) =
          state.x.col(i) - (G.col(i) + state.mu.col(i)) / rho_k;
    }
  }
  next.mu = state.mu + rho_k * (next.x * lap.L);
  fill_record(record, std::move(G));
  return next;
}

}  // namespace zodiac
