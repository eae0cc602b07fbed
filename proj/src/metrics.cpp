#include "zodiac/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zodiac {

double consensus_error(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.cols());
  if (n < 1) throw std::invalid_argument("consensus_error: no agents");
  const Eigen::VectorXd mean = x.rowwise().mean();
  return (x.colwise() - mean).squaredNorm() / static_cast<double>(n);
}

double gradient_estimate_error(const StochasticOracle& problem,
                               const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& estimates) {
  const int n = static_cast<int>(x.cols());
  if (estimates.rows() != x.rows() || estimates.cols() != n)
    throw std::invalid_argument("gradient_estimate_error: shape mismatch");
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += (estimates.col(i) - problem.true_local_gradient(i, x.col(i))).norm();
  return sum / static_cast<double>(n);
}

namespace {

// trace(A M B^T) = sum over coordinate rows a_c M b_c^T; the blockwise inner
// product of p x n iterate stacks under an n x n weight.
double weighted_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m,
                      const Eigen::MatrixXd& b) {
  return (a * m).cwiseProduct(b).sum();
}

Eigen::MatrixXd gradient_stack_at_mean(const StochasticOracle& problem,
                                       const Eigen::VectorXd& x_bar) {
  Eigen::MatrixXd g0(x_bar.size(), problem.num_agents());
  for (int i = 0; i < problem.num_agents(); ++i)
    g0.col(i) = problem.true_local_gradient(i, x_bar);
  return g0;
}

}  // namespace

LyapunovTerms lyapunov_terms(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                             const LaplacianData& lap, double beta,
                             double kappa1, const StochasticOracle& problem,
                             double f_star) {
  const int n = static_cast<int>(x.cols());
  if (lap.n() != n)
    throw std::invalid_argument("lyapunov_terms: graph size mismatch");
  if (beta <= 0.0)
    throw std::invalid_argument("lyapunov_terms: beta must be positive");
  if (kappa1 <= 1.0)
    throw std::invalid_argument("lyapunov_terms: kappa1 must exceed 1");

  const Eigen::VectorXd x_bar = x.rowwise().mean();
  const Eigen::MatrixXd z =
      v + gradient_stack_at_mean(problem, x_bar) / beta;
  const Eigen::MatrixXd& K = lap.K_small;
  const Eigen::MatrixXd m2 = lap.Q_small + kappa1 * K;

  LyapunovTerms t;
  t.w1 = 0.5 * weighted_inner(x, K, x);
  t.w2 = 0.5 * weighted_inner(z, m2, z);
  t.w3 = weighted_inner(x, K, z);
  t.w4 = n * (problem.global_value(x_bar) - f_star);
  t.total = t.w1 + t.w2 + t.w3 + t.w4;
  return t;
}

double lyapunov_w(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                  const LaplacianData& lap, double beta, double kappa1,
                  const StochasticOracle& problem, double f_star) {
  return lyapunov_terms(x, v, lap, beta, kappa1, problem, f_star).total;
}

double lyapunov_lower_bound(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                            const LaplacianData& lap, double beta,
                            double kappa1, const StochasticOracle& problem,
                            double f_star) {
  const int n = static_cast<int>(x.cols());
  const Eigen::VectorXd x_bar = x.rowwise().mean();
  const Eigen::MatrixXd z =
      v + gradient_stack_at_mean(problem, x_bar) / beta;
  const Eigen::MatrixXd& K = lap.K_small;
  const double v_hat = weighted_inner(x, K, x) + weighted_inner(z, K, z) +
                       n * (problem.global_value(x_bar) - f_star);
  const double factor =
      std::min(1.0 / (2.0 * lap.rho), (kappa1 - 1.0) / (2.0 * kappa1));
  return factor * v_hat;
}

double evaluate_accuracy(const Eigen::VectorXd& x_bar,
                         const ClassificationDataset& dataset, Split split) {
  if (x_bar.size() != dataset.d)
    throw std::invalid_argument("evaluate_accuracy: dimension mismatch");
  const int begin = split == Split::kTrain ? 0 : dataset.n_train;
  const int end =
      split == Split::kTrain ? dataset.n_train : dataset.total();
  if (begin == end) throw std::invalid_argument("evaluate_accuracy: empty split");
  int correct = 0;
  for (int row = begin; row < end; ++row) {
    const double score = dataset.features.row(row).dot(x_bar);
    const bool predicted_one = sigmoid(score) >= 0.5;
    if (predicted_one == (dataset.labels[row] == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(end - begin);
}

double rate_fit(const std::vector<double>& horizons,
                const std::vector<double>& values) {
  if (horizons.size() != values.size())
    throw std::invalid_argument("rate_fit: length mismatch");
  if (horizons.size() < 3)
    throw std::invalid_argument("rate_fit: need at least 3 grid points");
  const int m = static_cast<int>(horizons.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < m; ++i) {
    if (horizons[i] <= 0.0 || values[i] <= 0.0)
      throw std::invalid_argument("rate_fit: log-log fit needs positive data");
    const double lx = std::log(horizons[i]);
    const double ly = std::log(values[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

}  // namespace

std::string format_trace_row(const TraceRow& row) {
  std::ostringstream out;
  out << row.k << ',' << format_double(row.train_loss) << ','
      << format_double(row.grad_norm_sq) << ','
      << format_double(row.consensus_err) << ','
      << format_optional(row.grad_est_err) << ','
      << format_optional(row.test_acc) << ','
      << format_optional(row.lyapunov_w) << ',' << row.oracle_calls;
  return out.str();
}

void save_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trace_csv: cannot open " + path);
  out << kTraceHeader << '\n';
  for (const TraceRow& row : rows) out << format_trace_row(row) << '\n';
  if (!out) throw std::runtime_error("save_trace_csv: write failed for " + path);
}

std::vector<TraceRow> load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_trace_csv: empty file " + path);
  if (line != kTraceHeader)
    throw std::runtime_error("load_trace_csv: unexpected header in " + path);
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    // A trailing empty cell is dropped by getline; pad to 8 columns.
    while (cells.size() < 8) cells.emplace_back();
    if (cells.size() != 8)
      throw std::runtime_error("load_trace_csv: malformed row in " + path);
    TraceRow row;
    row.k = std::stoll(cells[0]);
    row.train_loss = std::stod(cells[1]);
    row.grad_norm_sq = std::stod(cells[2]);
    row.consensus_err = std::stod(cells[3]);
    if (!cells[4].empty()) row.grad_est_err = std::stod(cells[4]);
    if (!cells[5].empty()) row.test_acc = std::stod(cells[5]);
    if (!cells[6].empty()) row.lyapunov_w = std::stod(cells[6]);
    row.oracle_calls = std::stoull(cells[7]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace zodiac
