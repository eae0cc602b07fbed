#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zodiac/harness.hpp"

namespace fs = std::filesystem;
using namespace zodiac;

namespace {

// Relative output paths land under $ZODIAC_OUTPUT_ROOT when it is set.
fs::path resolve_out(const std::string& dir) {
  fs::path path(dir);
  if (path.is_absolute()) return path;
  const char* root = std::getenv("ZODIAC_OUTPUT_ROOT");
  if (root && *root) return fs::path(root) / path;
  return path;
}

ExperimentConfig load_base_config(const std::string& config_file,
                                  const std::string& preset_name,
                                  const std::vector<std::string>& overrides,
                                  Preset* preset_out) {
  Config raw;
  if (!preset_name.empty()) {
    const Preset preset = get_preset(preset_name);
    if (preset_out) *preset_out = preset;
    raw = preset.base.to_config();
  } else if (!config_file.empty()) {
    raw = Config::parse_file(config_file);
  } else {
    throw std::runtime_error("provide --config FILE or --preset NAME");
  }
  for (const std::string& assignment : overrides) raw.set_pair(assignment);
  ExperimentConfig config = ExperimentConfig::from_config(raw);
  for (const std::string& key : raw.unused_keys())
    std::cerr << "warning: config key `" << key << "` was not recognized\n";
  return config;
}

std::string percent(const std::optional<double>& fraction) {
  if (!fraction) return "-";
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%.1f", 100.0 * *fraction);
  return buffer;
}

struct SummaryRow {
  std::string name;
  long long T = 0;
  std::string status;
  double train_loss = 0.0;
  double grad_norm_sq = 0.0;
  std::optional<double> test_acc;
  std::uint64_t oracle_calls = 0;
};

void print_summary(const std::vector<SummaryRow>& rows) {
  std::printf("%-14s %9s %-10s %14s %14s %9s %14s\n", "algorithm", "T",
              "status", "train_loss", "grad_norm_sq", "acc(%)",
              "oracle_calls");
  for (const SummaryRow& row : rows)
    std::printf("%-14s %9lld %-10s %14.6g %14.6g %9s %14llu\n",
                row.name.c_str(), row.T, row.status.c_str(), row.train_loss,
                row.grad_norm_sq, percent(row.test_acc).c_str(),
                static_cast<unsigned long long>(row.oracle_calls));
}

void write_summary_csv(const fs::path& path,
                       const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string());
  out << "algorithm,T,status,train_loss,grad_norm_sq,test_acc,oracle_calls\n";
  for (const SummaryRow& row : rows) {
    out << row.name << ',' << row.T << ',' << row.status << ',';
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,", row.train_loss,
                  row.grad_norm_sq);
    out << buffer;
    if (row.test_acc) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", *row.test_acc);
      out << buffer;
    }
    out << ',' << row.oracle_calls << '\n';
  }
}

int cmd_run(const std::string& config_file, const std::string& preset_name,
            const std::string& out_dir, int seeds,
            const std::vector<std::string>& overrides) {
  Preset preset;
  const ExperimentConfig base =
      load_base_config(config_file, preset_name, overrides, &preset);
  const bool user_pinned_n_c =
      std::any_of(overrides.begin(), overrides.end(), [](const std::string& a) {
        Config probe;
        probe.set_pair(a);
        return probe.has("estimator.n_c");
      });
  std::vector<Algorithm> algorithms =
      preset.name.empty() ? std::vector<Algorithm>{base.algorithm}
                          : preset.algorithms;
  std::vector<long long> horizons =
      preset.horizons.empty() ? std::vector<long long>{base.T}
                              : preset.horizons;
  const fs::path root =
      resolve_out(out_dir.empty() ? base.output_dir : out_dir);

  bool any_diverged = false;
  for (int s = 0; s < seeds; ++s) {
    ExperimentConfig seed_config = base;
    seed_config.seed = base.seed + static_cast<std::uint64_t>(s);
    const fs::path seed_root =
        seeds > 1 ? root / ("seed-" + std::to_string(seed_config.seed)) : root;
    const Materialized mat = materialize(seed_config);
    std::printf("graph: n=%d edges=%zu rho=%.4f rho2=%.4f\n", mat.topology.n,
                mat.topology.edge_count(), mat.lap.rho, mat.lap.rho2);

    struct Completed {
      std::string label;
      ExperimentConfig config;
      RunResult result;
    };
    std::vector<Completed> completed;
    std::vector<SummaryRow> summary;
    std::vector<double> horizon_values, horizon_consensus, horizon_grad;

    for (Algorithm algorithm : algorithms) {
      for (long long T : horizons) {
        ExperimentConfig config = seed_config;
        config.algorithm = algorithm;
        config.T = T;
        if (!user_pinned_n_c) {
          const auto budget = preset.n_c_by_algorithm.find(algorithm);
          if (budget != preset.n_c_by_algorithm.end())
            config.estimator_n_c = budget->second;
        }
        const std::string label =
            horizons.size() > 1
                ? algorithm_name(algorithm) + "/T-" + std::to_string(T)
                : algorithm_name(algorithm);
        RunResult result = run_on(mat, config);
        write_run_artifacts((seed_root / label).string(), config, mat, result);

        SummaryRow row;
        row.name = label;
        row.T = T;
        row.status =
            result.status == RunStatus::kCompleted ? "completed" : "diverged";
        if (!result.trace.empty()) {
          const TraceRow& last = result.trace.back();
          row.train_loss = last.train_loss;
          row.grad_norm_sq = last.grad_norm_sq;
          row.test_acc = last.test_acc;
          row.oracle_calls = last.oracle_calls;
        }
        summary.push_back(row);
        std::printf(
            "[%s] %s  final train_loss=%.6g grad_norm_sq=%.6g test_acc=%s "
            "(%.1fs)\n",
            label.c_str(), row.status.c_str(), row.train_loss,
            row.grad_norm_sq, percent(row.test_acc).c_str(),
            result.wall_seconds);
        if (result.status == RunStatus::kDiverged) {
          any_diverged = true;
          std::fprintf(stderr, "divergence at iteration %lld: %s\n",
                       result.diverged_at, result.divergence_note.c_str());
        }
        if (result.has_running_averages &&
            result.status == RunStatus::kCompleted) {
          horizon_values.push_back(static_cast<double>(T));
          horizon_consensus.push_back(result.avg_consensus_err);
          horizon_grad.push_back(result.avg_grad_norm_sq);
        }
        completed.push_back(
            {label, std::move(config), std::move(result)});
      }
    }

    std::vector<std::pair<std::string, const std::vector<TraceRow>*>> curves;
    for (const Completed& run : completed)
      curves.emplace_back(run.label, &run.result.trace);
    fs::create_directories(seed_root);
    write_curves_csv((seed_root / "curves.csv").string(), curves);
    write_summary_csv(seed_root / "summary.csv", summary);
    std::printf("\n");
    print_summary(summary);

    if (horizons.size() >= 3 && horizon_values.size() == horizons.size()) {
      const double consensus_slope =
          rate_fit(horizon_values, horizon_consensus);
      const double grad_slope = rate_fit(horizon_values, horizon_grad);
      std::printf(
          "\nrunning-average slopes vs T: consensus_err %.4f, grad_norm_sq "
          "%.4f\n",
          consensus_slope, grad_slope);
      std::ofstream slopes(seed_root / "slopes.csv");
      slopes << "quantity,slope\nconsensus_err," << consensus_slope
             << "\ngrad_norm_sq," << grad_slope << '\n';
    }
  }
  return any_diverged ? 2 : 0;
}

int cmd_spectral(const std::string& kind, int n, double prob,
                 std::uint64_t seed, const std::string& file,
                 std::optional<double> kappa1, long long T, int p) {
  Topology topo;
  if (kind == "erdos_renyi") {
    topo = gen_erdos_renyi(n, prob, seed);
  } else if (kind == "path") {
    topo = path_topology(n);
  } else if (kind == "complete") {
    topo = complete_topology(n);
  } else if (kind == "file") {
    if (file.empty()) throw std::runtime_error("--file is required for kind=file");
    topo = load_edge_list_file(file);
  } else {
    throw std::runtime_error("unknown graph kind `" + kind + "`");
  }
  const LaplacianData lap = build_laplacian(topo);
  std::printf("agents:     %d\n", topo.n);
  std::printf("edges:      %zu\n", topo.edge_count());
  std::printf("connected:  %s\n", lap.connected ? "yes" : "no");
  std::printf("rho(L):     %.12g\n", lap.rho);
  if (!lap.connected) {
    std::printf("graph disconnected: no admissible step schedule exists\n");
    return 0;
  }
  std::printf("rho2(L):    %.12g\n", lap.rho2);
  const double floor = 1.0 / lap.rho2 + 1.0;
  std::printf("kappa1 must exceed 1/rho2 + 1 = %.12g\n", floor);
  const double k1 = kappa1.value_or(floor + 0.5);
  std::printf("kappa2 upper bound at kappa1 = %.6g: %.12g\n", k1,
              kappa2_upper_bound(lap, k1));
  if (T > 0 && p > 0) {
    const HyperParams hp =
        theorem_schedule(lap, p, topo.n, T, kappa1, std::nullopt, 1.0);
    std::printf("schedule for T=%lld, p=%d: alpha=%.12g beta=%.12g eta=%.12g "
                "(kappa1=%.6g kappa2=%.6g)\n",
                T, p, hp.alpha, hp.beta, hp.eta, hp.kappa1, hp.kappa2);
  }
  return 0;
}

int cmd_compare(const std::string& dir_raw) {
  const fs::path dir = resolve_out(dir_raw);
  struct Entry {
    std::string name;
    TraceRow last;
  };
  std::vector<Entry> entries;
  auto try_add = [&](const fs::path& run_dir, const std::string& name) {
    const fs::path trace = run_dir / "trace.csv";
    if (!fs::exists(trace)) return;
    const std::vector<TraceRow> rows = load_trace_csv(trace.string());
    if (rows.empty()) return;
    entries.push_back({name, rows.back()});
  };
  if (fs::exists(dir / "trace.csv")) try_add(dir, dir.filename().string());
  if (fs::is_directory(dir)) {
    std::vector<fs::path> children;
    for (const auto& child : fs::directory_iterator(dir))
      if (child.is_directory()) children.push_back(child.path());
    std::sort(children.begin(), children.end());
    for (const fs::path& child : children)
      try_add(child, child.filename().string());
  }
  if (entries.empty())
    throw std::runtime_error("no trace.csv found under " + dir.string());

  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    const double acc_a = a.last.test_acc.value_or(-1.0);
    const double acc_b = b.last.test_acc.value_or(-1.0);
    if (acc_a != acc_b) return acc_a > acc_b;
    return a.last.train_loss < b.last.train_loss;
  });

  std::printf("%-24s %14s %9s %9s\n", "algorithm", "train_loss", "acc(%)",
              "k");
  for (const Entry& entry : entries)
    std::printf("%-24s %14.6g %9s %9lld\n", entry.name.c_str(),
                entry.last.train_loss, percent(entry.last.test_acc).c_str(),
                entry.last.k);

  std::ofstream out(dir / "compare.csv");
  if (!out)
    throw std::runtime_error("cannot open " + (dir / "compare.csv").string());
  out << "algorithm,train_loss,test_acc,k,oracle_calls\n";
  for (const Entry& entry : entries) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", entry.last.train_loss);
    out << entry.name << ',' << buffer << ',';
    if (entry.last.test_acc) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", *entry.last.test_acc);
      out << buffer;
    }
    out << ',' << entry.last.k << ',' << entry.last.oracle_calls << '\n';
  }
  return 0;
}

int cmd_sweep(const std::string& config_file, const std::string& preset_name,
              const std::string& out_dir, const std::string& vary,
              const std::vector<std::string>& values,
              const std::vector<std::string>& overrides) {
  if (vary != "run.T" && vary != "problem.p" && vary != "graph.n" &&
      vary != "run.seed")
    throw std::runtime_error(
        "--vary must be one of run.T, problem.p, graph.n, run.seed");
  if (values.empty()) throw std::runtime_error("--values must be non-empty");
  const bool rate_axis = vary != "run.seed";
  if (rate_axis && values.size() < 3)
    throw std::runtime_error(
        "need at least 3 values of " + vary + " for a slope fit");

  Config raw;
  if (!preset_name.empty()) {
    raw = get_preset(preset_name).base.to_config();
  } else if (!config_file.empty()) {
    raw = Config::parse_file(config_file);
  } else {
    throw std::runtime_error("provide --config FILE or --preset NAME");
  }
  for (const std::string& assignment : overrides) raw.set_pair(assignment);
  if (rate_axis) raw.set("metrics.running_averages", "true");

  const fs::path root = resolve_out(
      out_dir.empty() ? raw.get_string("run.output_dir", "out") : out_dir);

  std::vector<double> axis, avg_consensus, avg_grad;
  bool any_diverged = false;
  for (const std::string& value : values) {
    Config item = raw;
    item.set(vary, value);
    const ExperimentConfig config = ExperimentConfig::from_config(item);
    const Materialized mat = materialize(config);
    RunResult result = run_on(mat, config);
    const std::string label = vary + "-" + value;
    write_run_artifacts((root / label).string(), config, mat, result);
    const TraceRow* last =
        result.trace.empty() ? nullptr : &result.trace.back();
    std::printf("[%s] %s  final train_loss=%.6g grad_norm_sq=%.6g "
                "test_acc=%s\n",
                label.c_str(),
                result.status == RunStatus::kCompleted ? "completed"
                                                       : "diverged",
                last ? last->train_loss : 0.0, last ? last->grad_norm_sq : 0.0,
                percent(last ? last->test_acc : std::nullopt).c_str());
    if (result.status == RunStatus::kDiverged) {
      any_diverged = true;
      continue;
    }
    if (rate_axis && result.has_running_averages) {
      axis.push_back(std::stod(value));
      avg_consensus.push_back(result.avg_consensus_err);
      avg_grad.push_back(result.avg_grad_norm_sq);
    }
  }

  if (rate_axis && axis.size() >= 3) {
    const double consensus_slope = rate_fit(axis, avg_consensus);
    const double grad_slope = rate_fit(axis, avg_grad);
    std::printf("\nrunning-average slopes vs %s: consensus_err %.4f, "
                "grad_norm_sq %.4f\n",
                vary.c_str(), consensus_slope, grad_slope);
    fs::create_directories(root);
    std::ofstream slopes(root / "slopes.csv");
    slopes << "quantity,slope\nconsensus_err," << consensus_slope
           << "\ngrad_norm_sq," << grad_slope << '\n';
  }
  return any_diverged ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed zeroth-order optimization simulator"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_preset, run_out;
  int run_seeds = 1;
  std::vector<std::string> run_sets;
  CLI::App* run = app.add_subcommand("run", "Execute one run or a preset");
  run->add_option("--config", run_config, "Config file (key = value lines)");
  run->add_option("--preset", run_preset,
                  "Preset: paper-fig1, paper-fig2, quadratic-rates");
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--seeds", run_seeds, "Number of consecutive seeds")
      ->check(CLI::PositiveNumber);
  run->add_option("--set", run_sets, "Override: key=value (repeatable)");

  // spectral
  std::string sp_kind = "erdos_renyi", sp_file;
  int sp_n = 10, sp_p = 0;
  double sp_prob = 0.4;
  std::uint64_t sp_seed = 1;
  long long sp_T = 0;
  double sp_kappa1_raw = 0.0;
  bool sp_kappa1_set = false;
  CLI::App* spectral =
      app.add_subcommand("spectral", "Graph spectrum and admissible schedule");
  spectral->add_option("--kind", sp_kind,
                       "erdos_renyi, path, complete, or file");
  spectral->add_option("--n", sp_n, "Number of agents");
  spectral->add_option("--prob", sp_prob, "Edge probability (erdos_renyi)");
  spectral->add_option("--seed", sp_seed, "Graph seed (erdos_renyi)");
  spectral->add_option("--file", sp_file, "Edge-list file (kind=file)");
  spectral
      ->add_option("--kappa1", sp_kappa1_raw,
                   "Evaluate the kappa2 bound at this kappa1")
      ->each([&](const std::string&) { sp_kappa1_set = true; });
  spectral->add_option("--T", sp_T, "Horizon for a resolved schedule");
  spectral->add_option("--p", sp_p, "Dimension for a resolved schedule");

  // compare
  std::string cmp_dir;
  CLI::App* compare =
      app.add_subcommand("compare", "Tabulate final metrics of finished runs");
  compare->add_option("--dir", cmp_dir, "Directory of run directories")
      ->required();

  // sweep
  std::string sw_config, sw_preset, sw_out, sw_vary;
  std::vector<std::string> sw_values, sw_sets;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Run a grid over one key and fit slopes");
  sweep->add_option("--config", sw_config, "Config file");
  sweep->add_option("--preset", sw_preset, "Preset name");
  sweep->add_option("--out", sw_out, "Output directory");
  sweep->add_option("--vary", sw_vary, "run.T, problem.p, graph.n, or run.seed")
      ->required();
  sweep->add_option("--values", sw_values, "Grid values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--set", sw_sets, "Override: key=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_config, run_preset, run_out, run_seeds, run_sets);
    if (spectral->parsed())
      return cmd_spectral(sp_kind, sp_n, sp_prob, sp_seed, sp_file,
                          sp_kappa1_set ? std::optional<double>(sp_kappa1_raw)
                                        : std::nullopt,
                          sp_T, sp_p);
    if (compare->parsed()) return cmd_compare(cmp_dir);
    if (sweep->parsed())
      return cmd_sweep(sw_config, sw_preset, sw_out, sw_vary, sw_values,
                       sw_sets);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
