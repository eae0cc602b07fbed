#include "zodiac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace zodiac {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Algorithm tokens
// ---------------------------------------------------------------------------

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kZodiacOpt1: return "zodiac_opt1";
    case Algorithm::kZodiacOpt2: return "zodiac_opt2";
    case Algorithm::kZoSgd: return "zo_sgd";
    case Algorithm::kZoScd: return "zo_scd";
    case Algorithm::kZoGda: return "zo_gda";
    case Algorithm::kZoneM: return "zone_m";
  }
  throw std::logic_error("algorithm_name: unknown algorithm");
}

Algorithm parse_algorithm(const std::string& token) {
  for (Algorithm a : all_algorithms())
    if (algorithm_name(a) == token) return a;
  throw std::runtime_error("config: key `algorithm` has unknown value `" +
                           token +
                           "` (expected zodiac_opt1, zodiac_opt2, zo_sgd, "
                           "zo_scd, zo_gda, or zone_m)");
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::kZodiacOpt1, Algorithm::kZodiacOpt2, Algorithm::kZoSgd,
          Algorithm::kZoScd,      Algorithm::kZoGda,      Algorithm::kZoneM};
}

bool is_centralized(Algorithm algorithm) {
  return algorithm == Algorithm::kZoSgd || algorithm == Algorithm::kZoScd;
}

// ---------------------------------------------------------------------------
// Config mapping
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw std::runtime_error("config: key `" + key + "` has invalid value `" +
                           value + "` (expected " + expected + ")");
}

void require_positive(const std::string& key, double value) {
  if (!(value > 0.0))
    throw std::runtime_error("config: key `" + key + "` must be positive");
}

void require_nonnegative(const std::string& key, double value) {
  if (value < 0.0)
    throw std::runtime_error("config: key `" + key + "` must be nonnegative");
}

std::string format_double_cfg(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// The estimator family each algorithm runs with; `estimator.kind`, when
// present, must agree.
std::string expected_estimator_kind(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kZodiacOpt1: return "forward";
    case Algorithm::kZodiacOpt2: return "central";
    case Algorithm::kZoGda: return "central";
    case Algorithm::kZoScd: return "central";
    case Algorithm::kZoSgd: return "gaussian";
    case Algorithm::kZoneM: return "gaussian";
  }
  throw std::logic_error("expected_estimator_kind: unknown algorithm");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& config) {
  ExperimentConfig c;

  const std::string problem_kind =
      config.get_string("problem.kind", "classification");
  if (problem_kind == "classification") {
    c.problem.kind = ProblemSpec::Kind::kClassification;
  } else if (problem_kind == "quadratic") {
    c.problem.kind = ProblemSpec::Kind::kQuadratic;
  } else {
    bad_value("problem.kind", problem_kind, "classification or quadratic");
  }
  c.problem.d = static_cast<int>(config.get_int("problem.d", c.problem.d));
  c.problem.n_train =
      static_cast<int>(config.get_int("problem.n_train", c.problem.n_train));
  c.problem.n_test =
      static_cast<int>(config.get_int("problem.n_test", c.problem.n_test));
  c.problem.noise_var =
      config.get_double("problem.noise_var", c.problem.noise_var);
  c.problem.p = static_cast<int>(config.get_int("problem.p", c.problem.p));
  c.problem.condition =
      config.get_double("problem.condition", c.problem.condition);
  c.problem.zeta = config.get_double("problem.zeta", c.problem.zeta);
  c.problem.value_noise_std =
      config.get_double("problem.value_noise_std", c.problem.value_noise_std);
  require_positive("problem.d", c.problem.d);
  require_positive("problem.n_train", c.problem.n_train);
  require_positive("problem.n_test", c.problem.n_test);
  require_nonnegative("problem.noise_var", c.problem.noise_var);
  require_positive("problem.p", c.problem.p);
  if (c.problem.condition < 1.0)
    throw std::runtime_error("config: key `problem.condition` must be >= 1");
  require_nonnegative("problem.zeta", c.problem.zeta);
  require_nonnegative("problem.value_noise_std", c.problem.value_noise_std);

  const std::string graph_kind = config.get_string("graph.kind", "erdos_renyi");
  if (graph_kind == "erdos_renyi") {
    c.graph.kind = GraphSpec::Kind::kErdosRenyi;
  } else if (graph_kind == "path") {
    c.graph.kind = GraphSpec::Kind::kPath;
  } else if (graph_kind == "complete") {
    c.graph.kind = GraphSpec::Kind::kComplete;
  } else if (graph_kind == "file") {
    c.graph.kind = GraphSpec::Kind::kFile;
  } else {
    bad_value("graph.kind", graph_kind, "erdos_renyi, path, complete, or file");
  }
  c.graph.n = static_cast<int>(config.get_int("graph.n", c.graph.n));
  c.graph.prob = config.get_double("graph.prob", c.graph.prob);
  c.graph.file = config.get_string("graph.file", c.graph.file);
  require_positive("graph.n", c.graph.n);
  if (c.graph.kind == GraphSpec::Kind::kErdosRenyi &&
      (c.graph.prob <= 0.0 || c.graph.prob > 1.0))
    throw std::runtime_error("config: key `graph.prob` must lie in (0, 1]");
  if (c.graph.kind == GraphSpec::Kind::kFile && c.graph.file.empty())
    throw std::runtime_error(
        "config: key `graph.file` is required when graph.kind = file");

  c.algorithm = parse_algorithm(config.get_string("algorithm", "zodiac_opt1"));
  if (config.has("estimator.kind")) {
    const std::string kind = config.get_string("estimator.kind");
    const std::string expected = expected_estimator_kind(c.algorithm);
    if (kind != expected)
      throw std::runtime_error("config: key `estimator.kind` = `" + kind +
                               "` conflicts with algorithm " +
                               algorithm_name(c.algorithm) + " (uses " +
                               expected + ")");
  }
  c.estimator_n_c =
      static_cast<int>(config.get_int("estimator.n_c", c.estimator_n_c));
  require_positive("estimator.n_c", c.estimator_n_c);
  c.common_randomness =
      config.get_bool("estimator.common_randomness", c.common_randomness);

  const std::string delta_mode =
      config.get_string("estimator.delta.mode", "fixed");
  if (delta_mode == "theorem") {
    c.delta_mode = DeltaSchedule::Mode::kTheoremDecay;
  } else if (delta_mode == "fixed") {
    c.delta_mode = DeltaSchedule::Mode::kFixedExperiment;
  } else if (delta_mode == "constant") {
    c.delta_mode = DeltaSchedule::Mode::kConstant;
  } else {
    bad_value("estimator.delta.mode", delta_mode, "theorem, fixed, or constant");
  }
  c.delta_kappa = config.get_double("estimator.delta.kappa_delta", c.delta_kappa);
  c.delta_value = config.get_double("estimator.delta.value", c.delta_value);
  require_positive("estimator.delta.kappa_delta", c.delta_kappa);
  require_positive("estimator.delta.value", c.delta_value);

  const std::string hyper_mode = config.get_string("hyper.mode", "manual");
  if (hyper_mode == "manual") {
    c.hyper_mode = ScheduleMode::kManual;
  } else if (hyper_mode == "theorem") {
    c.hyper_mode = ScheduleMode::kTheoremSchedule;
  } else {
    bad_value("hyper.mode", hyper_mode, "manual or theorem");
  }
  c.alpha = config.get_double("hyper.alpha", c.alpha);
  c.beta = config.get_double("hyper.beta", c.beta);
  c.eta = config.get_double("hyper.eta", c.eta);
  if (c.hyper_mode == ScheduleMode::kManual) {
    require_positive("hyper.alpha", c.alpha);
    require_positive("hyper.beta", c.beta);
    require_positive("hyper.eta", c.eta);
  }
  if (config.has("hyper.kappa1")) c.kappa1 = config.get_double("hyper.kappa1");
  if (config.has("hyper.kappa2")) c.kappa2 = config.get_double("hyper.kappa2");

  c.baseline.mu = config.get_double("baseline.mu", c.baseline.mu);
  c.baseline.eta0 = config.get_double("baseline.eta0", c.baseline.eta0);
  c.baseline.decay_exponent =
      config.get_double("baseline.decay_exponent", c.baseline.decay_exponent);
  c.baseline.rho0 = config.get_double("baseline.rho0", c.baseline.rho0);
  require_positive("baseline.mu", c.baseline.mu);
  require_positive("baseline.eta0", c.baseline.eta0);
  require_positive("baseline.decay_exponent", c.baseline.decay_exponent);
  require_positive("baseline.rho0", c.baseline.rho0);

  c.T = config.get_int("run.T", c.T);
  if (c.T < 0) throw std::runtime_error("config: key `run.T` must be >= 0");
  c.seed = config.get_uint64("run.seed", c.seed);
  c.checkpoint_every =
      config.get_int("run.checkpoint_every", c.checkpoint_every);
  require_positive("run.checkpoint_every",
                   static_cast<double>(c.checkpoint_every));
  c.output_dir = config.get_string("run.output_dir", c.output_dir);
  c.init_scale = config.get_double("init.scale", c.init_scale);
  require_nonnegative("init.scale", c.init_scale);

  c.running_averages =
      config.get_bool("metrics.running_averages", c.running_averages);
  c.invariant_checks =
      config.get_bool("metrics.invariant_checks", c.invariant_checks);
  c.f_star = config.get_optional_double("metrics.f_star");
  c.loss_at_mean = config.get_bool("metrics.loss_at_mean", c.loss_at_mean);

  return c;
}

Config ExperimentConfig::to_config() const {
  Config out;
  out.set("problem.kind", problem.kind == ProblemSpec::Kind::kClassification
                              ? "classification"
                              : "quadratic");
  out.set("problem.d", std::to_string(problem.d));
  out.set("problem.n_train", std::to_string(problem.n_train));
  out.set("problem.n_test", std::to_string(problem.n_test));
  out.set("problem.noise_var", format_double_cfg(problem.noise_var));
  out.set("problem.p", std::to_string(problem.p));
  out.set("problem.condition", format_double_cfg(problem.condition));
  out.set("problem.zeta", format_double_cfg(problem.zeta));
  out.set("problem.value_noise_std", format_double_cfg(problem.value_noise_std));
  switch (graph.kind) {
    case GraphSpec::Kind::kErdosRenyi: out.set("graph.kind", "erdos_renyi"); break;
    case GraphSpec::Kind::kPath: out.set("graph.kind", "path"); break;
    case GraphSpec::Kind::kComplete: out.set("graph.kind", "complete"); break;
    case GraphSpec::Kind::kFile: out.set("graph.kind", "file"); break;
  }
  out.set("graph.n", std::to_string(graph.n));
  out.set("graph.prob", format_double_cfg(graph.prob));
  if (!graph.file.empty()) out.set("graph.file", graph.file);
  out.set("algorithm", algorithm_name(algorithm));
  out.set("estimator.n_c", std::to_string(estimator_n_c));
  out.set("estimator.common_randomness", common_randomness ? "true" : "false");
  switch (delta_mode) {
    case DeltaSchedule::Mode::kTheoremDecay:
      out.set("estimator.delta.mode", "theorem");
      break;
    case DeltaSchedule::Mode::kFixedExperiment:
      out.set("estimator.delta.mode", "fixed");
      break;
    case DeltaSchedule::Mode::kConstant:
      out.set("estimator.delta.mode", "constant");
      break;
  }
  out.set("estimator.delta.kappa_delta", format_double_cfg(delta_kappa));
  out.set("estimator.delta.value", format_double_cfg(delta_value));
  out.set("hyper.mode",
          hyper_mode == ScheduleMode::kManual ? "manual" : "theorem");
  out.set("hyper.alpha", format_double_cfg(alpha));
  out.set("hyper.beta", format_double_cfg(beta));
  out.set("hyper.eta", format_double_cfg(eta));
  if (kappa1) out.set("hyper.kappa1", format_double_cfg(*kappa1));
  if (kappa2) out.set("hyper.kappa2", format_double_cfg(*kappa2));
  out.set("baseline.mu", format_double_cfg(baseline.mu));
  out.set("baseline.eta0", format_double_cfg(baseline.eta0));
  out.set("baseline.decay_exponent", format_double_cfg(baseline.decay_exponent));
  out.set("baseline.rho0", format_double_cfg(baseline.rho0));
  out.set("run.T", std::to_string(T));
  out.set("run.seed", std::to_string(seed));
  out.set("run.checkpoint_every", std::to_string(checkpoint_every));
  out.set("run.output_dir", output_dir);
  out.set("init.scale", format_double_cfg(init_scale));
  out.set("metrics.running_averages", running_averages ? "true" : "false");
  out.set("metrics.invariant_checks", invariant_checks ? "true" : "false");
  if (f_star) out.set("metrics.f_star", format_double_cfg(*f_star));
  out.set("metrics.loss_at_mean", loss_at_mean ? "true" : "false");
  return out;
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

Materialized materialize(const ExperimentConfig& config) {
  Materialized m;
  switch (config.graph.kind) {
    case GraphSpec::Kind::kErdosRenyi:
      m.topology =
          gen_erdos_renyi(config.graph.n, config.graph.prob, config.seed);
      break;
    case GraphSpec::Kind::kPath:
      m.topology = path_topology(config.graph.n);
      break;
    case GraphSpec::Kind::kComplete:
      m.topology = complete_topology(config.graph.n);
      break;
    case GraphSpec::Kind::kFile:
      m.topology = load_edge_list_file(config.graph.file);
      break;
  }
  m.lap = build_laplacian(m.topology);
  m.graph_hash = topology_hash(m.topology);
  const int n = m.topology.n;
  const int p = config.problem.dimension();

  if (config.problem.kind == ProblemSpec::Kind::kClassification) {
    auto ds = std::make_shared<ClassificationDataset>(
        gen_dataset(config.problem.d, config.problem.n_train,
                    config.problem.n_test, config.seed));
    partition_dataset(*ds, n, config.seed);
    m.dataset = ds;
    m.dataset_hash = dataset_hash(*ds);
    m.problem = std::make_shared<ClassificationProblem>(
        *ds, config.problem.noise_var);
    ClassificationDataset pooled_ds = *ds;
    partition_dataset(pooled_ds, 1, config.seed);
    m.pooled = std::make_shared<ClassificationProblem>(
        std::move(pooled_ds), config.problem.noise_var);
  } else {
    auto q = std::make_shared<QuadraticProblem>(QuadraticProblem::random(
        n, p, config.problem.condition, config.seed, config.problem.zeta,
        config.problem.value_noise_std));
    m.problem = q;
    m.pooled = std::make_shared<QuadraticProblem>(q->pooled());
    m.exact_f_star = q->optimal_value();
  }

  m.x0 = Eigen::MatrixXd::Zero(p, n);
  if (config.init_scale > 0.0) {
    Rng rng = make_stream(config.seed, StreamTag::kInit);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < p; ++r) m.x0(r, i) = config.init_scale * gauss(rng);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Run driver
// ---------------------------------------------------------------------------

namespace {

EstimatorSpec resolve_estimator(const ExperimentConfig& config, int dim) {
  EstimatorSpec spec;
  spec.n_c = config.estimator_n_c;
  spec.common_randomness = config.common_randomness;
  spec.gaussian_mu = config.baseline.mu;
  switch (config.delta_mode) {
    case DeltaSchedule::Mode::kTheoremDecay:
      spec.delta = DeltaSchedule::theorem_decay(config.delta_kappa);
      break;
    case DeltaSchedule::Mode::kFixedExperiment:
      spec.delta =
          DeltaSchedule::fixed_experiment(std::max<long long>(config.T, 1), dim);
      break;
    case DeltaSchedule::Mode::kConstant:
      spec.delta = DeltaSchedule::constant(config.delta_value);
      break;
  }
  switch (config.algorithm) {
    case Algorithm::kZodiacOpt1:
      spec.kind = EstimatorKind::kCoordForward;
      break;
    case Algorithm::kZodiacOpt2:
    case Algorithm::kZoGda:
    case Algorithm::kZoScd:
      spec.kind = EstimatorKind::kCoordCentral;
      break;
    case Algorithm::kZoSgd:
    case Algorithm::kZoneM:
      spec.kind = EstimatorKind::kGaussianTwoPoint;
      break;
  }
  return spec;
}

HyperParams resolve_hyper(const ExperimentConfig& config,
                          const LaplacianData& lap, int p, int n) {
  if (config.hyper_mode == ScheduleMode::kTheoremSchedule)
    return theorem_schedule(lap, p, n, std::max<long long>(config.T, 1),
                            config.kappa1, config.kappa2, config.delta_kappa);
  HyperParams hp = HyperParams::manual(config.alpha, config.beta, config.eta);
  if (config.kappa1) {
    hp.kappa1 = *config.kappa1;
    hp.has_kappa1 = true;
  }
  return hp;
}

// Uniform stepping facade over the six algorithms so the trace/metrics loop
// is written once. `step(want)` advances one round and, when asked, returns
// the estimates paired with the pre-step iterates.
struct Driver {
  int m = 1;  // iterate columns (n, or 1 for centralized)
  std::uint64_t per_iter_calls = 0;
  std::function<const Eigen::MatrixXd&()> x;
  std::function<const Eigen::MatrixXd*()> dual;  // null unless primal-dual
  std::function<Eigen::MatrixXd(bool want_estimates)> step;
  std::function<Eigen::MatrixXd()> estimates_at_current;  // may be null
};

}  // namespace

RunResult run_on(const Materialized& mat, const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = mat.topology.n;
  const int p = static_cast<int>(mat.x0.rows());
  if (mat.problem->dim() != p)
    throw std::invalid_argument("run_on: problem dimension mismatch");
  if (config.estimator_n_c > p)
    throw std::runtime_error(
        "config: key `estimator.n_c` exceeds the problem dimension");

  const bool centralized = is_centralized(config.algorithm);
  const StochasticOracle& base =
      centralized ? *mat.pooled : *mat.problem;
  CountingOracle counting(base);
  const EstimatorSpec spec = resolve_estimator(config, p);
  const bool checks = config.invariant_checks;

  RunResult result;
  result.invariants_checked = checks;
  InvariantReport* report = &result.invariants;

  Driver driver;
  HyperParams hp;  // resolved for the primal-dual variants
  switch (config.algorithm) {
    case Algorithm::kZodiacOpt1:
    case Algorithm::kZodiacOpt2: {
      hp = resolve_hyper(config, mat.lap, p, n);
      auto st = std::make_shared<NetworkState>(NetworkState::initial(mat.x0));
      auto max_v = std::make_shared<double>(0.0);
      driver.m = n;
      driver.per_iter_calls = static_cast<std::uint64_t>(n) *
                              oracle_calls_per_estimate(spec);
      driver.x = [st]() -> const Eigen::MatrixXd& { return st->x; };
      driver.dual = [st]() { return &st->v; };
      driver.step = [st, max_v, report, checks, &mat, &counting, &config, hp,
                     spec](bool want) {
        StepRecord rec;
        const bool need = want || checks;
        NetworkState next = zodiac_step(*st, mat.lap, hp, spec, counting,
                                        config.seed, need ? &rec : nullptr);
        if (checks) {
          for (int i = 0; i < next.v.cols(); ++i)
            *max_v = std::max(*max_v, next.v.col(i).norm());
          const double dual_sum =
              next.v.rowwise().sum().norm() / (1.0 + *max_v);
          report->dual_sum = std::max(report->dual_sum, dual_sum);
          const Eigen::VectorXd expected =
              st->x.rowwise().mean() - hp.eta * rec.mean_estimate;
          const Eigen::VectorXd got = next.x.rowwise().mean();
          const double mean_dyn =
              (got - expected).norm() / (1.0 + got.norm());
          report->mean_dynamics = std::max(report->mean_dynamics, mean_dyn);
        }
        Eigen::MatrixXd out;
        if (want) out = std::move(rec.estimates);
        *st = std::move(next);
        return out;
      };
      break;
    }
    case Algorithm::kZoGda: {
      auto W = std::make_shared<Eigen::MatrixXd>(gda_mixing_matrix(mat.lap));
      auto st = std::make_shared<GdaState>(
          zo_gda_init(mat.x0, spec, counting, config.seed));
      driver.m = n;
      driver.per_iter_calls = static_cast<std::uint64_t>(n) *
                              oracle_calls_per_estimate(spec);
      driver.x = [st]() -> const Eigen::MatrixXd& { return st->x; };
      driver.step = [st, W, report, checks, &counting, &config,
                     spec](bool want) {
        Eigen::MatrixXd out;
        if (want) out = st->g;  // estimates at the pre-step iterates
        const double eta_k =
            config.baseline.eta0 /
            std::pow(static_cast<double>(st->k + 1),
                     config.baseline.decay_exponent);
        GdaState next = zo_gda_step(*st, *W, eta_k, spec, counting,
                                    config.seed, nullptr);
        if (checks) {
          const Eigen::VectorXd y_sum = next.y.rowwise().sum();
          const Eigen::VectorXd g_sum = next.g.rowwise().sum();
          const double tracking =
              (y_sum - g_sum).norm() / (1.0 + g_sum.norm());
          report->tracking = std::max(report->tracking, tracking);
        }
        *st = std::move(next);
        return out;
      };
      driver.estimates_at_current = [st]() { return st->g; };
      break;
    }
    case Algorithm::kZoneM: {
      auto st = std::make_shared<ZoneState>(zone_m_init(mat.x0));
      auto max_mu = std::make_shared<double>(0.0);
      driver.m = n;
      driver.per_iter_calls = static_cast<std::uint64_t>(n) * 2;
      driver.x = [st]() -> const Eigen::MatrixXd& { return st->x; };
      driver.dual = [st]() { return &st->mu; };
      driver.step = [st, max_mu, report, checks, &mat, &counting,
                     &config](bool want) {
        StepRecord rec;
        const double rho_k =
            config.baseline.rho0 * std::sqrt(static_cast<double>(st->k + 1));
        ZoneState next =
            zone_m_step(*st, mat.lap, rho_k, config.baseline.mu, counting,
                        config.seed, want ? &rec : nullptr);
        if (checks) {
          for (int i = 0; i < next.mu.cols(); ++i)
            *max_mu = std::max(*max_mu, next.mu.col(i).norm());
          const double range =
              next.mu.rowwise().sum().norm() / (1.0 + *max_mu);
          report->dual_range = std::max(report->dual_range, range);
        }
        Eigen::MatrixXd out;
        if (want) out = std::move(rec.estimates);
        *st = std::move(next);
        return out;
      };
      break;
    }
    case Algorithm::kZoSgd:
    case Algorithm::kZoScd: {
      auto st = std::make_shared<Eigen::MatrixXd>(
          mat.x0.rowwise().mean());  // p x 1
      auto iter = std::make_shared<long long>(0);
      const bool scd = config.algorithm == Algorithm::kZoScd;
      driver.m = 1;
      driver.per_iter_calls = 2;
      driver.x = [st]() -> const Eigen::MatrixXd& { return *st; };
      driver.step = [st, iter, scd, &counting, &config](bool want) {
        Rng rng = make_stream(config.seed, 0,
                              static_cast<std::uint64_t>(*iter));
        StepRecord rec;
        StepRecord* rp = want ? &rec : nullptr;
        const Eigen::VectorXd current = st->col(0);
        const Eigen::VectorXd next =
            scd ? zo_scd_step(current, counting, config.baseline.mu,
                              config.baseline.eta0, rng, rp)
                : zo_sgd_step(current, counting, config.baseline.mu,
                              config.baseline.eta0, rng, rp);
        st->col(0) = next;
        ++*iter;
        Eigen::MatrixXd out;
        if (want) out = std::move(rec.estimates);
        return out;
      };
      break;
    }
  }
  result.init_oracle_calls = counting.calls();
  result.per_iteration_oracle_calls = driver.per_iter_calls;

  // Potential diagnostic: primal-dual iterates, a reference minimum, and a
  // recorded kappa1 are all required.
  const std::optional<double> f_star =
      config.f_star ? config.f_star : mat.exact_f_star;
  const bool lyapunov_enabled =
      (config.algorithm == Algorithm::kZodiacOpt1 ||
       config.algorithm == Algorithm::kZodiacOpt2) &&
      f_star.has_value() && hp.has_kappa1;

  const bool classification =
      config.problem.kind == ProblemSpec::Kind::kClassification;
  const StochasticOracle& metric_problem = *mat.problem;
  const StochasticOracle& estimate_problem = base;

  auto record_row = [&](long long k, const Eigen::MatrixXd& x_pre,
                        const Eigen::MatrixXd* v_pre,
                        const Eigen::MatrixXd* estimates,
                        std::uint64_t calls) {
    TraceRow row;
    row.k = k;
    const Eigen::VectorXd x_bar = x_pre.rowwise().mean();
    if (config.loss_at_mean ||
        driver.m != metric_problem.num_agents()) {
      row.train_loss = metric_problem.global_value(x_bar);
    } else {
      double sum = 0.0;
      for (int i = 0; i < driver.m; ++i)
        sum += metric_problem.local_value(i, x_pre.col(i));
      row.train_loss = sum / driver.m;
    }
    row.grad_norm_sq = metric_problem.true_global_gradient(x_bar).squaredNorm();
    row.consensus_err = consensus_error(x_pre);
    if (estimates && estimates->size() > 0)
      row.grad_est_err =
          gradient_estimate_error(estimate_problem, x_pre, *estimates);
    if (classification)
      row.test_acc = evaluate_accuracy(x_bar, *mat.dataset, Split::kTest);
    if (lyapunov_enabled && v_pre)
      row.lyapunov_w = lyapunov_w(x_pre, *v_pre, mat.lap, hp.beta, hp.kappa1,
                                  metric_problem, *f_star);
    row.oracle_calls = calls;
    result.trace.push_back(row);
  };

  double sum_consensus = 0.0;
  double sum_grad = 0.0;
  auto accumulate_averages = [&](const Eigen::MatrixXd& x_now) {
    sum_consensus += consensus_error(x_now);
    sum_grad += metric_problem.true_global_gradient(x_now.rowwise().mean())
                    .squaredNorm();
  };

  const long long T = config.T;
  const long long cadence = config.checkpoint_every;
  for (long long k = 0; k < T; ++k) {
    if (config.running_averages) accumulate_averages(driver.x());
    const bool checkpoint = (k % cadence == 0);
    if (checkpoint) {
      const Eigen::MatrixXd x_pre = driver.x();
      std::optional<Eigen::MatrixXd> v_pre;
      if (driver.dual && driver.dual()) v_pre = *driver.dual();
      const std::uint64_t calls_pre = counting.calls();
      const Eigen::MatrixXd estimates = driver.step(true);
      record_row(k, x_pre, v_pre ? &*v_pre : nullptr,
                 estimates.size() > 0 ? &estimates : nullptr, calls_pre);
    } else {
      driver.step(false);
    }
    if (auto reason = divergence_reason(driver.x())) {
      result.status = RunStatus::kDiverged;
      result.diverged_at = k;
      result.divergence_note = *reason;
      break;
    }
  }

  if (result.status == RunStatus::kCompleted) {
    if (config.running_averages) {
      accumulate_averages(driver.x());
      result.has_running_averages = true;
      result.avg_consensus_err = sum_consensus / static_cast<double>(T + 1);
      result.avg_grad_norm_sq = sum_grad / static_cast<double>(T + 1);
    }
    const Eigen::MatrixXd* v_final =
        (driver.dual && driver.dual()) ? driver.dual() : nullptr;
    std::optional<Eigen::MatrixXd> final_estimates;
    if (driver.estimates_at_current)
      final_estimates = driver.estimates_at_current();
    record_row(T, driver.x(), v_final,
               final_estimates ? &*final_estimates : nullptr,
               counting.calls());
  }

  result.final_x = driver.x();
  result.oracle_calls = counting.calls();
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

RunResult run_experiment(const ExperimentConfig& config) {
  const Materialized mat = materialize(config);
  return run_on(mat, config);
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

std::vector<std::string> default_substitutions(const ExperimentConfig& config) {
  std::vector<std::string> notes;
  switch (config.algorithm) {
    case Algorithm::kZoSgd:
    case Algorithm::kZoScd:
      notes.push_back(
          "stepsize has no published value; using baseline.eta0 = " +
          format_double_cfg(config.baseline.eta0));
      break;
    case Algorithm::kZoGda:
      notes.push_back(
          "mixing matrix has no published value; using W = I - L/(rho(L)+1)");
      notes.push_back("tracker seeded with each agent's first estimate");
      break;
    case Algorithm::kZoneM:
      notes.push_back(
          "inner update transcribed from the cited method-of-multipliers "
          "scheme with J = 1 sample per iteration; proximal weight D + Adj");
      notes.push_back(
          "estimator: Gaussian two-point with baseline.mu = " +
          format_double_cfg(config.baseline.mu));
      break;
    case Algorithm::kZodiacOpt1:
    case Algorithm::kZodiacOpt2:
      if (config.hyper_mode == ScheduleMode::kTheoremSchedule) {
        if (!config.kappa1)
          notes.push_back("kappa1 not supplied; defaulted to 1/rho2(L) + 1.5");
        if (!config.kappa2)
          notes.push_back(
              "kappa2 not supplied; defaulted to 0.9x its admissible upper "
              "bound");
      }
      if (config.problem.kind == ProblemSpec::Kind::kClassification &&
          config.estimator_n_c == config.problem.d) {
        notes.push_back(
            "coordinate budget has no published value; full-dimension "
            "estimator.n_c = " + std::to_string(config.estimator_n_c) +
            " reproduces the reported accuracies");
      }
      break;
  }
  return notes;
}

namespace {

std::string hash_hex(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

}  // namespace

void write_run_artifacts(const std::string& dir, const ExperimentConfig& config,
                         const Materialized& mat, const RunResult& result) {
  fs::create_directories(dir);
  save_trace_csv(dir + "/trace.csv", result.trace);

  {
    std::ofstream out(dir + "/final_state.csv");
    if (!out)
      throw std::runtime_error("write_run_artifacts: cannot open " + dir +
                               "/final_state.csv");
    for (int i = 0; i < result.final_x.cols(); ++i)
      out << (i ? "," : "") << "agent_" << i;
    out << '\n';
    for (int r = 0; r < result.final_x.rows(); ++r) {
      for (int i = 0; i < result.final_x.cols(); ++i)
        out << (i ? "," : "") << format_double_cfg(result.final_x(r, i));
      out << '\n';
    }
  }

  json meta;
  meta["schema"] = "zodiacsim-run-metadata-v1";
  meta["library_version"] = kLibraryVersion;
  meta["seed_rule"] =
      "stream(master, a, b) = mt19937_64(mix64(mix64(master + g*(a+1)) + "
      "g*(b+1))), g = 0x9E3779B97F4A7C15, mix64 = splitmix64 finalizer; "
      "agent i at iteration k draws from stream(seed, i, k); named scopes "
      "use stream(seed, 0xFFFFFFFF00000000 | tag, sub)";

  json cfg = json::object();
  const Config echoed = config.to_config();
  for (const auto& [key, value] : echoed.entries()) cfg[key] = value;
  meta["config"] = cfg;

  json resolved;
  resolved["algorithm"] = algorithm_name(config.algorithm);
  const int p = config.problem.dimension();
  const int n = mat.topology.n;
  try {
    if (config.algorithm == Algorithm::kZodiacOpt1 ||
        config.algorithm == Algorithm::kZodiacOpt2) {
      const HyperParams hp = resolve_hyper(config, mat.lap, p, n);
      resolved["alpha"] = hp.alpha;
      resolved["beta"] = hp.beta;
      resolved["eta"] = hp.eta;
      if (hp.has_kappa1) resolved["kappa1"] = hp.kappa1;
      if (hp.mode == ScheduleMode::kTheoremSchedule) {
        resolved["kappa2"] = hp.kappa2;
        resolved["kappa_delta"] = hp.kappa_delta;
      }
    }
  } catch (const std::exception& e) {
    resolved["schedule_error"] = e.what();
  }
  const EstimatorSpec spec = resolve_estimator(config, p);
  json est;
  est["kind"] = expected_estimator_kind(config.algorithm);
  est["n_c"] = spec.n_c;
  est["common_randomness"] = spec.common_randomness;
  switch (spec.delta.mode) {
    case DeltaSchedule::Mode::kTheoremDecay: est["delta_mode"] = "theorem"; break;
    case DeltaSchedule::Mode::kFixedExperiment: est["delta_mode"] = "fixed"; break;
    case DeltaSchedule::Mode::kConstant: est["delta_mode"] = "constant"; break;
  }
  if (spec.kind == EstimatorKind::kGaussianTwoPoint) {
    est["mu"] = spec.gaussian_mu;
  } else {
    est["delta_at_0"] = delta_at(spec.delta, 0, p, n);
  }
  resolved["estimator"] = est;
  resolved["defaults_substituted"] = default_substitutions(config);
  meta["resolved"] = resolved;

  json spectral;
  spectral["n"] = n;
  spectral["edges"] = mat.topology.edge_count();
  spectral["rho"] = mat.lap.rho;
  spectral["rho2"] = mat.lap.rho2;
  spectral["connected"] = mat.lap.connected;
  meta["spectral"] = spectral;

  json hashes;
  hashes["graph"] = hash_hex(mat.graph_hash);
  if (mat.dataset) hashes["dataset"] = hash_hex(mat.dataset_hash);
  meta["hashes"] = hashes;

  json res;
  res["status"] =
      result.status == RunStatus::kCompleted ? "completed" : "diverged";
  if (result.status == RunStatus::kDiverged) {
    res["diverged_at"] = result.diverged_at;
    res["divergence_note"] = result.divergence_note;
  }
  res["oracle_calls"] = result.oracle_calls;
  res["init_oracle_calls"] = result.init_oracle_calls;
  res["per_iteration_oracle_calls"] = result.per_iteration_oracle_calls;
  res["wall_seconds"] = result.wall_seconds;
  if (!result.trace.empty()) {
    const TraceRow& last = result.trace.back();
    json fin;
    fin["k"] = last.k;
    fin["train_loss"] = last.train_loss;
    fin["grad_norm_sq"] = last.grad_norm_sq;
    fin["consensus_err"] = last.consensus_err;
    if (last.test_acc) fin["test_acc"] = *last.test_acc;
    res["final"] = fin;
  }
  if (result.has_running_averages) {
    res["avg_consensus_err"] = result.avg_consensus_err;
    res["avg_grad_norm_sq"] = result.avg_grad_norm_sq;
  }
  meta["result"] = res;

  json inv;
  inv["checked"] = result.invariants_checked;
  inv["dual_sum"] = result.invariants.dual_sum;
  inv["mean_dynamics"] = result.invariants.mean_dynamics;
  inv["tracking"] = result.invariants.tracking;
  inv["dual_range"] = result.invariants.dual_range;
  inv["within_tolerances"] = result.invariants.within_tolerances();
  meta["invariants"] = inv;

  std::ofstream out(dir + "/metadata.json");
  if (!out)
    throw std::runtime_error("write_run_artifacts: cannot open " + dir +
                             "/metadata.json");
  out << meta.dump(2) << '\n';
}

void write_curves_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, const std::vector<TraceRow>*>>&
        traces) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_curves_csv: cannot open " + path);
  out << "algorithm,k,quantity,value\n";
  for (const auto& [name, rows] : traces) {
    for (const TraceRow& row : *rows) {
      auto emit = [&](const char* quantity, double value) {
        out << name << ',' << row.k << ',' << quantity << ','
            << format_double_cfg(value) << '\n';
      };
      emit("train_loss", row.train_loss);
      emit("grad_norm_sq", row.grad_norm_sq);
      emit("consensus_err", row.consensus_err);
      if (row.grad_est_err) emit("grad_est_err", *row.grad_est_err);
      if (row.test_acc) emit("test_acc", *row.test_acc);
      if (row.lyapunov_w) emit("lyapunov_w", *row.lyapunov_w);
    }
  }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

// Benchmark seed: the sampled 10-agent graph must be connected (guaranteed
// by rejection) and keep rho(L) safely below the stability edge of the fixed
// benchmark steps (eta=0.08, alpha=4, beta=3 turn unstable once rho(L)
// exceeds ~6.87; seed 35 gives rho(L)=6.08 with 16 edges).
constexpr std::uint64_t kBenchmarkSeed = 35;

ExperimentConfig benchmark_base() {
  ExperimentConfig c;
  c.problem.kind = ProblemSpec::Kind::kClassification;
  c.problem.d = 100;
  c.problem.n_train = 2000;
  c.problem.n_test = 200;
  c.problem.noise_var = 0.01;
  c.graph.kind = GraphSpec::Kind::kErdosRenyi;
  c.graph.n = 10;
  c.graph.prob = 0.4;
  c.algorithm = Algorithm::kZodiacOpt1;
  c.estimator_n_c = 1;
  c.common_randomness = true;
  c.delta_mode = DeltaSchedule::Mode::kFixedExperiment;
  c.hyper_mode = ScheduleMode::kManual;
  c.alpha = 4.0;
  c.beta = 3.0;
  c.eta = 0.08;
  c.T = 50000;
  c.seed = kBenchmarkSeed;
  c.checkpoint_every = 100;
  c.init_scale = 0.0;
  return c;
}

ExperimentConfig rates_base() {
  ExperimentConfig c;
  c.problem.kind = ProblemSpec::Kind::kQuadratic;
  c.problem.p = 4;
  c.problem.condition = 10.0;
  c.problem.zeta = 0.0;
  c.problem.value_noise_std = 0.0;
  // Complete graph: its large algebraic connectivity admits a kappa_2 an
  // order of magnitude above the path graph's, so the dual transient dies
  // within a few hundred iterations and even the shortest horizon in the
  // rate sweep measures the asymptotic decay.
  c.graph.kind = GraphSpec::Kind::kComplete;
  c.graph.n = 4;
  c.algorithm = Algorithm::kZodiacOpt2;
  c.estimator_n_c = 1;
  c.common_randomness = true;
  c.delta_mode = DeltaSchedule::Mode::kTheoremDecay;
  c.delta_kappa = 1.0;
  c.hyper_mode = ScheduleMode::kTheoremSchedule;
  c.T = 32000;
  c.seed = 7;
  c.checkpoint_every = 100;
  c.init_scale = 1.0;
  c.running_averages = true;
  return c;
}

}  // namespace

Preset get_preset(const std::string& name) {
  Preset preset;
  preset.name = name;
  // The benchmark's coordinate budget has no published value.  The reported
  // accuracies (99.0 / 98.5) are only reachable when the coordinate methods
  // probe every one of the 100 dimensions each round; sub-sampled budgets
  // plateau near 90% on this horizon.  The baselines keep the two-point
  // default, which reproduces their reported range.  Recorded per run as a
  // substituted default in metadata.
  const std::map<Algorithm, int> benchmark_budgets = {
      {Algorithm::kZodiacOpt1, 100}, {Algorithm::kZodiacOpt2, 100}};
  if (name == "paper-fig1") {
    preset.base = benchmark_base();
    preset.algorithms = all_algorithms();
    preset.n_c_by_algorithm = benchmark_budgets;
  } else if (name == "paper-fig2") {
    preset.base = benchmark_base();
    preset.algorithms = {Algorithm::kZodiacOpt1, Algorithm::kZodiacOpt2};
    preset.n_c_by_algorithm = benchmark_budgets;
  } else if (name == "quadratic-rates") {
    preset.base = rates_base();
    preset.algorithms = {Algorithm::kZodiacOpt2};
    preset.horizons = {2000, 8000, 32000};
  } else {
    throw std::runtime_error("unknown preset `" + name +
                             "` (expected paper-fig1, paper-fig2, or "
                             "quadratic-rates)");
  }
  return preset;
}

std::vector<std::string> preset_names() {
  return {"paper-fig1", "paper-fig2", "quadratic-rates"};
}

}  // namespace zodiac
