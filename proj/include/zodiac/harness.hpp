#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zodiac/baselines.hpp"
#include "zodiac/config.hpp"
#include "zodiac/estimators.hpp"
#include "zodiac/graph.hpp"
#include "zodiac/metrics.hpp"
#include "zodiac/problems.hpp"
#include "zodiac/zodiac.hpp"

namespace zodiac {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class Algorithm {
  kZodiacOpt1,  // forward coordinate differences
  kZodiacOpt2,  // central coordinate differences
  kZoSgd,
  kZoScd,
  kZoGda,
  kZoneM,
};

std::string algorithm_name(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& token);
std::vector<Algorithm> all_algorithms();
bool is_centralized(Algorithm algorithm);

struct ProblemSpec {
  enum class Kind { kClassification, kQuadratic };
  Kind kind = Kind::kClassification;
  // classification
  int d = 100;
  int n_train = 2000;
  int n_test = 200;
  double noise_var = 0.01;
  // quadratic
  int p = 2;
  double condition = 10.0;
  double zeta = 0.0;
  double value_noise_std = 0.0;

  int dimension() const { return kind == Kind::kClassification ? d : p; }
};

struct GraphSpec {
  enum class Kind { kErdosRenyi, kPath, kComplete, kFile };
  Kind kind = Kind::kErdosRenyi;
  int n = 10;
  double prob = 0.4;
  std::string file;
};

// Fully resolved description of one run; `from_config` maps the flat
// key-value format onto it and `to_config` echoes every field back (the
// canonical round-trip used by metadata and replays).
struct ExperimentConfig {
  ProblemSpec problem;
  GraphSpec graph;
  Algorithm algorithm = Algorithm::kZodiacOpt1;

  int estimator_n_c = 1;
  bool common_randomness = true;
  DeltaSchedule::Mode delta_mode = DeltaSchedule::Mode::kFixedExperiment;
  double delta_kappa = 1.0;  // theorem-decay coefficient
  double delta_value = 1e-3;  // constant mode

  ScheduleMode hyper_mode = ScheduleMode::kManual;
  double alpha = 4.0;
  double beta = 3.0;
  double eta = 0.08;
  std::optional<double> kappa1;  // schedule overrides (defaulted when unset)
  std::optional<double> kappa2;

  BaselineConfig baseline;

  long long T = 50000;
  std::uint64_t seed = 1;
  long long checkpoint_every = 100;
  std::string output_dir = "out";
  double init_scale = 0.0;

  bool running_averages = false;
  bool invariant_checks = true;
  std::optional<double> f_star;  // enables the potential diagnostic
  bool loss_at_mean = true;      // f(xbar) vs (1/n) sum_i f_i(x_i)

  static ExperimentConfig from_config(const Config& config);
  Config to_config() const;
};

// Everything derived from (problem, graph, seed) that runs share: the
// sampled problem instance, the communication graph and its spectrum, and
// the initial iterates. Algorithms never re-materialize any of this.
struct Materialized {
  std::shared_ptr<const ClassificationDataset> dataset;  // classification only
  std::shared_ptr<const StochasticOracle> problem;  // n-agent objective
  std::shared_ptr<const StochasticOracle> pooled;   // single-agent view
  Topology topology;
  LaplacianData lap;
  Eigen::MatrixXd x0;  // p x n
  std::optional<double> exact_f_star;  // known minimum (quadratic)
  std::uint64_t dataset_hash = 0;
  std::uint64_t graph_hash = 0;
};

Materialized materialize(const ExperimentConfig& config);

inline constexpr double kDualSumTol = 1e-8;
inline constexpr double kMeanDynamicsTol = 1e-10;
inline constexpr double kTrackingTol = 1e-6;
inline constexpr double kDualRangeTol = 1e-8;

// Worst scaled residual of each structural identity seen during a run.
struct InvariantReport {
  double dual_sum = 0.0;       // ||sum_i v_i|| / (1 + max_k max_i ||v_i||)
  double mean_dynamics = 0.0;  // ||xbar' - (xbar - eta gbar)|| / (1 + ||xbar'||)
  double tracking = 0.0;       // ||sum_i y_i - sum_i g_i|| / (1 + ||sum_i g_i||)
  double dual_range = 0.0;     // ||sum_i mu_i|| / (1 + max_k max_i ||mu_i||)

  bool within_tolerances() const {
    return dual_sum <= kDualSumTol && mean_dynamics <= kMeanDynamicsTol &&
           tracking <= kTrackingTol && dual_range <= kDualRangeTol;
  }
};

enum class RunStatus { kCompleted, kDiverged };

struct RunResult {
  RunStatus status = RunStatus::kCompleted;
  long long diverged_at = -1;
  std::string divergence_note;
  std::vector<TraceRow> trace;
  InvariantReport invariants;
  bool invariants_checked = false;
  // (1/(T+1)) sums over k = 0..T, maintained per iteration when enabled.
  bool has_running_averages = false;
  double avg_consensus_err = 0.0;
  double avg_grad_norm_sq = 0.0;
  Eigen::MatrixXd final_x;  // p x n (p x 1 for centralized algorithms)
  std::uint64_t oracle_calls = 0;
  std::uint64_t init_oracle_calls = 0;
  std::uint64_t per_iteration_oracle_calls = 0;
  double wall_seconds = 0.0;
};

RunResult run_on(const Materialized& mat, const ExperimentConfig& config);
RunResult run_experiment(const ExperimentConfig& config);

// Notes on every place a published value was missing and a documented
// default filled in (surfaced in run metadata).
std::vector<std::string> default_substitutions(const ExperimentConfig& config);

// trace.csv, metadata.json, final_state.csv under `dir` (created if needed).
void write_run_artifacts(const std::string& dir, const ExperimentConfig& config,
                         const Materialized& mat, const RunResult& result);

// Long-format plot data: header `algorithm,k,quantity,value`.
void write_curves_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, const std::vector<TraceRow>*>>&
        traces);

struct Preset {
  std::string name;
  ExperimentConfig base;
  std::vector<Algorithm> algorithms;
  std::vector<long long> horizons;  // non-empty: sweep over run.T
  // Per-algorithm coordinate budgets layered over base.estimator_n_c.  The
  // benchmark gives the coordinate methods the full dimension while the
  // baselines keep the two-point default; an explicit estimator.n_c override
  // on the command line wins over this map.
  std::map<Algorithm, int> n_c_by_algorithm;
};

// paper-fig1, paper-fig2, quadratic-rates.
Preset get_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace zodiac
