#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zodiac/rng.hpp"

namespace zodiac {

// One draw of the stochastic component xi of an oracle query. Estimators
// draw a realization once and evaluate the oracle at several points with it,
// so the same data sample and the same additive noise back every evaluation
// of a single estimate (common random numbers).
struct Realization {
  int sample = 0;             // global sample row, where applicable
  std::uint64_t noise_key = 0;  // seeds all per-realization noise
};

// Zeroth-order access to per-agent stochastic costs f_i(x) = E[F_i(x, xi)].
// eval() is one oracle call. True gradients exist on every problem here but
// are reserved for metrics and diagnostics; the algorithms never see them.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual int dim() const = 0;
  virtual int num_agents() const = 0;

  virtual Realization draw(int agent, Rng& rng) const = 0;
  virtual double eval(int agent, const Eigen::VectorXd& x,
                      const Realization& xi) const = 0;

  // Noiseless local cost f_i and its analytic gradient.
  virtual double local_value(int agent, const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd true_local_gradient(int agent,
                                              const Eigen::VectorXd& x) const = 0;

  // Smoothness constant L_f of the local costs (an upper bound).
  virtual double smoothness() const = 0;

  double eval_noisy(int agent, const Eigen::VectorXd& x, Rng& rng) const {
    return eval(agent, x, draw(agent, rng));
  }
  // f(x) = (1/n) sum_i f_i(x) and its gradient.
  double global_value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd true_global_gradient(const Eigen::VectorXd& x) const;

 protected:
  void check_dim(const Eigen::VectorXd& x) const;
};

// Decorator that counts oracle calls (one per eval()).
class CountingOracle : public StochasticOracle {
 public:
  explicit CountingOracle(const StochasticOracle& inner) : inner_(inner) {}

  int dim() const override { return inner_.dim(); }
  int num_agents() const override { return inner_.num_agents(); }
  Realization draw(int agent, Rng& rng) const override {
    return inner_.draw(agent, rng);
  }
  double eval(int agent, const Eigen::VectorXd& x,
              const Realization& xi) const override {
    ++calls_;
    return inner_.eval(agent, x, xi);
  }
  double local_value(int agent, const Eigen::VectorXd& x) const override {
    return inner_.local_value(agent, x);
  }
  Eigen::VectorXd true_local_gradient(int agent,
                                      const Eigen::VectorXd& x) const override {
    return inner_.true_local_gradient(agent, x);
  }
  double smoothness() const override { return inner_.smoothness(); }

  std::uint64_t calls() const { return calls_; }
  void reset() { calls_ = 0; }

 private:
  const StochasticOracle& inner_;
  mutable std::uint64_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Synthetic binary-classification data
// ---------------------------------------------------------------------------

// Samples a ~ N(0, I_d), labeled by the planted vector of ones:
// y = 1 iff sigmoid(a . ones) >= 0.5. Train rows come first, then test rows.
struct ClassificationDataset {
  int d = 0;
  int n_train = 0;
  int n_test = 0;
  Eigen::MatrixXd features;  // (n_train + n_test) x d
  std::vector<int> labels;   // 0/1
  std::vector<std::vector<int>> partition;  // agent -> global train rows

  int total() const { return n_train + n_test; }
  bool is_train(int row) const { return row < n_train; }
};

ClassificationDataset gen_dataset(int d, int n_train, int n_test,
                                  std::uint64_t seed);

// Splits the training rows uniformly at random into n_agents shards of (near)
// equal size. The first (n_train mod n_agents) shards get one extra row.
void partition_dataset(ClassificationDataset& ds, int n_agents,
                       std::uint64_t seed);

// CSV with header f0..f{d-1},label,split,agent. Test rows carry agent -1.
void save_dataset_csv(const ClassificationDataset& ds, std::ostream& out);
void save_dataset_csv(const ClassificationDataset& ds, const std::string& path);
ClassificationDataset load_dataset_csv(std::istream& in);
ClassificationDataset load_dataset_csv_file(const std::string& path);

std::uint64_t dataset_hash(const ClassificationDataset& ds);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

// Nonlinear least squares: f_i(x) = mean over the agent's shard of
// (y - sigmoid(a . x))^2. One oracle call evaluates a single uniformly drawn
// shard sample (batch size 1) plus zero-mean Gaussian noise of variance
// noise_var.
class ClassificationProblem : public StochasticOracle {
 public:
  ClassificationProblem(ClassificationDataset dataset, double noise_var);

  int dim() const override { return dataset_.d; }
  int num_agents() const override {
    return static_cast<int>(dataset_.partition.size());
  }
  Realization draw(int agent, Rng& rng) const override;
  double eval(int agent, const Eigen::VectorXd& x,
              const Realization& xi) const override;
  double local_value(int agent, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd true_local_gradient(int agent,
                                      const Eigen::VectorXd& x) const override;
  double smoothness() const override { return smoothness_; }

  const ClassificationDataset& dataset() const { return dataset_; }
  double noise_var() const { return noise_var_; }

  // Pointwise loss terms for one sample row.
  double sample_loss(int row, const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample_gradient(int row, const Eigen::VectorXd& x) const;

 private:
  ClassificationDataset dataset_;
  double noise_var_;
  double noise_std_;
  double smoothness_;
};

// Curvature bound c = max over y in {0,1} and z of |d^2/dz^2 (y - sigmoid(z))^2|,
// evaluated once on a grid. The classification smoothness constant is
// c * max_i ||a_i||^2.
double squared_sigmoid_loss_curvature();

// Quadratic validation problem: f_i(x) = 0.5 x^T A_i x - b_i^T x with A_i
// symmetric PSD. Stochasticity is explicit and fully known:
//   F_i(x, xi) = f_i(x) + xi . x + eps,
// xi ~ N(0, zeta^2 I) (per-coordinate gradient noise, Assumption-style) and
// eps ~ N(0, value_noise_std^2) additive evaluation noise. Both are derived
// from the realization key, so common-random-number evaluations cancel eps
// exactly and share xi.
class QuadraticProblem : public StochasticOracle {
 public:
  QuadraticProblem(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::VectorXd> b,
                   double zeta = 0.0, double value_noise_std = 0.0);

  // Random instance: per-agent spectra log-spaced in [1, condition].
  static QuadraticProblem random(int n_agents, int p, double condition,
                                 std::uint64_t seed, double zeta = 0.0,
                                 double value_noise_std = 0.0);

  int dim() const override { return static_cast<int>(b_[0].size()); }
  int num_agents() const override { return static_cast<int>(b_.size()); }
  Realization draw(int agent, Rng& rng) const override;
  double eval(int agent, const Eigen::VectorXd& x,
              const Realization& xi) const override;
  double local_value(int agent, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd true_local_gradient(int agent,
                                      const Eigen::VectorXd& x) const override;
  double smoothness() const override { return smoothness_; }

  double zeta() const { return zeta_; }
  double sigma1_sq() const { return static_cast<double>(dim()) * zeta_ * zeta_; }

  Eigen::VectorXd exact_minimizer() const;
  double optimal_value() const;

  // Single-agent instance of the network average (1/n) sum_i f_i.
  QuadraticProblem pooled() const;

 private:
  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::VectorXd> b_;
  double zeta_;
  double value_noise_std_;
  double smoothness_;
};

// Empirical Assumption-5 constant: max over agents and probe points of
// ||grad f_i(x) - grad f(x)||^2. Diagnostic only.
double empirical_sigma2_sq(const StochasticOracle& oracle,
                           const std::vector<Eigen::VectorXd>& points);

}  // namespace zodiac
