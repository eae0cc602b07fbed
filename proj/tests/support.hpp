#pragma once

// Shared test fixtures: a noiseless single-or-multi-agent oracle wrapping
// plain std::function callables, for hand-computable estimator checks.

#include <functional>
#include <utility>
#include <vector>

#include "zodiac/problems.hpp"

namespace zodiac::testing {

class FunctionOracle : public StochasticOracle {
 public:
  using Value = std::function<double(const Eigen::VectorXd&)>;
  using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  FunctionOracle(int dim, Value value, Gradient gradient,
                 double smoothness = 1.0)
      : dim_(dim), agents_(1), smoothness_(smoothness) {
    values_.push_back(std::move(value));
    gradients_.push_back(std::move(gradient));
  }

  FunctionOracle(int dim, std::vector<Value> values,
                 std::vector<Gradient> gradients, double smoothness = 1.0)
      : dim_(dim),
        agents_(static_cast<int>(values.size())),
        values_(std::move(values)),
        gradients_(std::move(gradients)),
        smoothness_(smoothness) {}

  int dim() const override { return dim_; }
  int num_agents() const override { return agents_; }
  Realization draw(int, Rng&) const override { return {}; }
  double eval(int agent, const Eigen::VectorXd& x,
              const Realization&) const override {
    return values_[agent](x);
  }
  double local_value(int agent, const Eigen::VectorXd& x) const override {
    return values_[agent](x);
  }
  Eigen::VectorXd true_local_gradient(int agent,
                                      const Eigen::VectorXd& x) const override {
    return gradients_[agent](x);
  }
  double smoothness() const override { return smoothness_; }

 private:
  int dim_;
  int agents_;
  std::vector<Value> values_;
  std::vector<Gradient> gradients_;
  double smoothness_;
};

inline FunctionOracle linear_oracle(const Eigen::VectorXd& a) {
  return FunctionOracle(
      static_cast<int>(a.size()),
      [a](const Eigen::VectorXd& x) { return a.dot(x); },
      [a](const Eigen::VectorXd&) { return a; }, 0.0);
}

}  // namespace zodiac::testing
