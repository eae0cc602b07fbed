// Python surface for the simulator: graph/spectral helpers, the step-size
// schedule, estimator utilities, and a dict-returning run driver. Everything
// heavier (artifact files, sweeps, presets across algorithms) stays in the
// CLI; this module is for interactive use and scripting.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "zodiac/harness.hpp"

namespace py = pybind11;
using namespace zodiac;

namespace {

Topology topology_from_args(const std::string& kind, int n, double prob,
                            std::uint64_t seed, const std::string& file) {
  if (kind == "path") return path_topology(n);
  if (kind == "complete") return complete_topology(n);
  if (kind == "erdos_renyi") return gen_erdos_renyi(n, prob, seed);
  if (kind == "file") return load_edge_list_file(file);
  throw std::invalid_argument(
      "graph kind must be path, complete, erdos_renyi, or file");
}

py::dict laplacian_dict(const std::string& kind, int n, double prob,
                        std::uint64_t seed, const std::string& file) {
  const Topology topo = topology_from_args(kind, n, prob, seed, file);
  const LaplacianData lap = build_laplacian(topo);
  py::list edges;
  for (const auto& e : topo.edges)
    edges.append(py::make_tuple(e.first, e.second));
  py::dict out;
  out["n"] = topo.n;
  out["edges"] = edges;
  out["L"] = lap.L;
  out["eigenvalues"] = lap.eigenvalues;
  out["rho"] = lap.rho;
  out["rho2"] = lap.rho2;
  out["connected"] = lap.connected;
  return out;
}

py::dict schedule_dict(const std::string& kind, int n, int p, long long T,
                       double prob, std::uint64_t seed, const std::string& file,
                       std::optional<double> kappa1,
                       std::optional<double> kappa2, double kappa_delta) {
  const Topology topo = topology_from_args(kind, n, prob, seed, file);
  const LaplacianData lap = build_laplacian(topo);
  const HyperParams hp =
      theorem_schedule(lap, p, n, T, kappa1, kappa2, kappa_delta);
  py::dict out;
  out["alpha"] = hp.alpha;
  out["beta"] = hp.beta;
  out["eta"] = hp.eta;
  out["kappa1"] = hp.kappa1;
  out["kappa2"] = hp.kappa2;
  out["kappa2_upper_bound"] = kappa2_upper_bound(lap, hp.kappa1);
  out["kappa_delta"] = hp.kappa_delta;
  return out;
}

double delta_at_args(const std::string& mode, long long k, int p, int n,
                     double kappa_delta, double value, long long T, int d) {
  DeltaSchedule schedule;
  if (mode == "theorem") {
    schedule = DeltaSchedule::theorem_decay(kappa_delta);
  } else if (mode == "fixed") {
    schedule = DeltaSchedule::fixed_experiment(T, d);
  } else if (mode == "constant") {
    schedule = DeltaSchedule::constant(value);
  } else {
    throw std::invalid_argument(
        "delta mode must be theorem, fixed, or constant");
  }
  return delta_at(schedule, k, p, n);
}

py::object opt_to_py(const std::optional<double>& value) {
  if (!value) return py::none();
  return py::float_(*value);
}

py::dict result_dict(const RunResult& result) {
  py::dict out;
  out["status"] =
      result.status == RunStatus::kCompleted ? "completed" : "diverged";
  if (result.status == RunStatus::kDiverged) {
    out["diverged_at"] = result.diverged_at;
    out["divergence_note"] = result.divergence_note;
  }
  py::list trace;
  for (const TraceRow& row : result.trace) {
    py::dict r;
    r["k"] = row.k;
    r["train_loss"] = row.train_loss;
    r["grad_norm_sq"] = row.grad_norm_sq;
    r["consensus_err"] = row.consensus_err;
    r["grad_est_err"] = opt_to_py(row.grad_est_err);
    r["test_acc"] = opt_to_py(row.test_acc);
    r["lyapunov_w"] = opt_to_py(row.lyapunov_w);
    r["oracle_calls"] = row.oracle_calls;
    trace.append(r);
  }
  out["trace"] = trace;
  out["final_x"] = result.final_x;
  out["oracle_calls"] = result.oracle_calls;
  out["init_oracle_calls"] = result.init_oracle_calls;
  out["per_iteration_oracle_calls"] = result.per_iteration_oracle_calls;
  if (result.invariants_checked) {
    py::dict inv;
    inv["dual_sum"] = result.invariants.dual_sum;
    inv["mean_dynamics"] = result.invariants.mean_dynamics;
    inv["tracking"] = result.invariants.tracking;
    inv["dual_range"] = result.invariants.dual_range;
    inv["ok"] = result.invariants.within_tolerances();
    out["invariants"] = inv;
  }
  if (result.has_running_averages) {
    out["avg_consensus_err"] = result.avg_consensus_err;
    out["avg_grad_norm_sq"] = result.avg_grad_norm_sq;
  }
  out["wall_seconds"] = result.wall_seconds;
  return out;
}

py::dict run_config_text(const std::string& text) {
  const Config raw = Config::parse_string(text);
  const ExperimentConfig config = ExperimentConfig::from_config(raw);
  RunResult result;
  {
    py::gil_scoped_release release;
    result = run_experiment(config);
  }
  return result_dict(result);
}

py::dict preset_dict(const std::string& name) {
  const Preset preset = get_preset(name);
  py::dict out;
  out["name"] = preset.name;
  out["config"] = preset.base.to_config().serialize();
  py::list algos;
  for (Algorithm a : preset.algorithms) algos.append(algorithm_name(a));
  out["algorithms"] = algos;
  out["horizons"] = preset.horizons;
  py::dict budgets;
  for (const auto& [algorithm, n_c] : preset.n_c_by_algorithm)
    budgets[py::str(algorithm_name(algorithm))] = n_c;
  out["n_c_by_algorithm"] = budgets;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Distributed stochastic zeroth-order optimization simulator: "
      "coordinate-sampling gradient estimators, a Laplacian-coupled "
      "primal-dual method with a certified step schedule, four reference "
      "algorithms, and a seeded experiment driver.";

  m.attr("__version__") = kLibraryVersion;
  m.attr("TRACE_HEADER") = kTraceHeader;

  m.def("laplacian", &laplacian_dict, py::arg("kind"), py::arg("n") = 0,
        py::arg("prob") = 0.4, py::arg("seed") = 0, py::arg("file") = "",
        "Build a communication graph and return its Laplacian spectrum: "
        "keys n, edges, L, eigenvalues, rho, rho2, connected.");

  m.def("theorem_schedule", &schedule_dict, py::arg("kind"), py::arg("n"),
        py::arg("p"), py::arg("T"), py::arg("prob") = 0.4, py::arg("seed") = 0,
        py::arg("file") = "", py::arg("kappa1") = py::none(),
        py::arg("kappa2") = py::none(), py::arg("kappa_delta") = 1.0,
        "Resolve the decaying-step parameters (alpha, beta, eta) for the "
        "given graph, dimension p, and horizon T; omitted kappa constants "
        "take their documented defaults.");

  m.def("variance_bound", &variance_bound, py::arg("grad_norm_sq"),
        py::arg("p"), py::arg("n_c"), py::arg("zeta_sq"), py::arg("sigma1_sq"),
        py::arg("L_f"), py::arg("delta"),
        "Upper bound on the second moment of the coordinate-sampling "
        "gradient estimator.");

  m.def("delta_at", &delta_at_args, py::arg("mode"), py::arg("k"), py::arg("p"),
        py::arg("n"), py::arg("kappa_delta") = 1.0, py::arg("value") = 1e-3,
        py::arg("T") = 0, py::arg("d") = 0,
        "Smoothing parameter at iteration k for the named schedule "
        "(theorem, fixed, or constant).");

  m.def("rate_fit", &rate_fit, py::arg("horizons"), py::arg("values"),
        "Least-squares log-log slope of values against horizons.");

  m.def("run", &run_config_text, py::arg("config_text"),
        "Parse a key-value config, execute the run, and return a dict with "
        "status, trace rows, final iterates, oracle-call counts, and "
        "invariant residuals. Writes nothing to disk.");

  m.def("preset", &preset_dict, py::arg("name"),
        "Bundled experiment preset: base config text, algorithm list, "
        "horizon grid, and per-algorithm coordinate budgets.");

  m.def("preset_names", &preset_names, "Names of the bundled presets.");
}
