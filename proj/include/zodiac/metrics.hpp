#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zodiac/graph.hpp"
#include "zodiac/problems.hpp"

namespace zodiac {

// One checkpoint of a run. Optional fields serialize as empty CSV cells:
// grad_est_err on rows where no fresh estimates exist (the final row),
// test_acc for problems without a test split, lyapunov_w unless enabled.
struct TraceRow {
  long long k = 0;
  double train_loss = 0.0;
  double grad_norm_sq = 0.0;
  double consensus_err = 0.0;
  std::optional<double> grad_est_err;
  std::optional<double> test_acc;
  std::optional<double> lyapunov_w;
  std::uint64_t oracle_calls = 0;
};

inline constexpr const char* kTraceHeader =
    "k,train_loss,grad_norm_sq,consensus_err,grad_est_err,test_acc,"
    "lyapunov_w,oracle_calls";

// (1/n) sum_i ||x_i - xbar||^2 over the columns of x.
double consensus_error(const Eigen::MatrixXd& x);

// (1/n) sum_i ||est_i - grad f_i(x_i)|| for per-agent estimate columns.
double gradient_estimate_error(const StochasticOracle& problem,
                               const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& estimates);

// Potential-function diagnostic of the primal-dual dynamics:
//   W = 1/2 ||x||^2_K + 1/2 ||z||^2_{Q + kappa1 K} + <x, K z> + n (f(xbar) - f_star)
// with z = v + g0/beta and g0 the stack of local gradients at xbar; K and Q
// act blockwise per coordinate.
struct LyapunovTerms {
  double w1 = 0.0;  // consensus energy
  double w2 = 0.0;  // dual tracking energy
  double w3 = 0.0;  // cross term
  double w4 = 0.0;  // n (f(xbar) - f_star)
  double total = 0.0;
};

LyapunovTerms lyapunov_terms(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                             const LaplacianData& lap, double beta,
                             double kappa1, const StochasticOracle& problem,
                             double f_star);

double lyapunov_w(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                  const LaplacianData& lap, double beta, double kappa1,
                  const StochasticOracle& problem, double f_star);

// Companion lower bound min{1/(2 rho), (kappa1-1)/(2 kappa1)} * V_hat with
//   V_hat = ||x||^2_K + ||z||^2_K + n (f(xbar) - f_star);
// W >= bound >= 0 whenever f(xbar) >= f_star and kappa1 > 1.
double lyapunov_lower_bound(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                            const LaplacianData& lap, double beta,
                            double kappa1, const StochasticOracle& problem,
                            double f_star);

enum class Split { kTrain, kTest };

// Fraction of split samples with (sigmoid(a^T x) >= 0.5) == (label == 1).
double evaluate_accuracy(const Eigen::VectorXd& x_bar,
                         const ClassificationDataset& dataset, Split split);

// Least-squares slope of log(value) vs log(T); needs >= 3 grid points.
double rate_fit(const std::vector<double>& horizons,
                const std::vector<double>& values);

std::string format_trace_row(const TraceRow& row);
void save_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> load_trace_csv(const std::string& path);

}  // namespace zodiac
