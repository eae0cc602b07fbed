#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <set>
#include <sstream>

#include "zodiac/problems.hpp"

using namespace zodiac;

namespace {

ClassificationDataset small_dataset(std::uint64_t seed = 4,
                                    int n_agents = 3) {
  ClassificationDataset ds = gen_dataset(10, 60, 20, seed);
  partition_dataset(ds, n_agents, seed);
  return ds;
}

Eigen::VectorXd finite_difference_gradient(const StochasticOracle& oracle,
                                           int agent, const Eigen::VectorXd& x,
                                           double h = 1e-6) {
  Eigen::VectorXd grad(x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    grad(j) =
        (oracle.local_value(agent, xp) - oracle.local_value(agent, xm)) /
        (2.0 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("dataset generation matches the planted labeling rule") {
  const ClassificationDataset ds = gen_dataset(100, 2000, 200, 1);
  CHECK(ds.d == 100);
  CHECK(ds.n_train == 2000);
  CHECK(ds.n_test == 200);
  CHECK(ds.features.rows() == 2200);
  const Eigen::VectorXd planted = Eigen::VectorXd::Ones(100);
  for (int row = 0; row < ds.total(); ++row) {
    const double score = ds.features.row(row).dot(planted);
    CHECK(ds.labels[row] == (sigmoid(score) >= 0.5 ? 1 : 0));
  }
}

TEST_CASE("label balance is near one half") {
  double ones_fraction = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ClassificationDataset ds = gen_dataset(100, 2000, 1, seed);
    ones_fraction +=
        std::accumulate(ds.labels.begin(), ds.labels.begin() + 2000, 0) /
        2000.0;
  }
  CHECK(ones_fraction / 50.0 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("dataset generation is deterministic") {
  const ClassificationDataset a = gen_dataset(20, 50, 10, 9);
  const ClassificationDataset b = gen_dataset(20, 50, 10, 9);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(dataset_hash(a) == dataset_hash(b));
  CHECK(dataset_hash(a) != dataset_hash(gen_dataset(20, 50, 10, 10)));
}

TEST_CASE("partition is a disjoint near-equal cover of the training rows") {
  ClassificationDataset ds = gen_dataset(10, 64, 10, 2);
  partition_dataset(ds, 5, 2);
  REQUIRE(ds.partition.size() == 5);
  std::set<int> seen;
  for (const auto& shard : ds.partition) {
    const auto size = static_cast<int>(shard.size());
    CHECK(size >= 12);  // 64 = 5*12 + 4: four shards of 13, one of 12
    CHECK(size <= 13);
    for (int row : shard) {
      CHECK(ds.is_train(row));
      CHECK(seen.insert(row).second);  // no row assigned twice
    }
  }
  CHECK(seen.size() == 64);
}

TEST_CASE("classification local value is the shard-average loss") {
  const ClassificationDataset ds = small_dataset();
  const ClassificationProblem problem(ds, 0.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.3);
  for (int agent = 0; agent < 3; ++agent) {
    double expected = 0.0;
    for (int row : ds.partition[agent]) expected += problem.sample_loss(row, x);
    expected /= static_cast<double>(ds.partition[agent].size());
    CHECK(problem.local_value(agent, x) ==
          doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("analytic gradients match finite differences") {
  const ClassificationProblem classification(small_dataset(), 0.0);
  const QuadraticProblem quadratic =
      QuadraticProblem::random(3, 6, 10.0, 17);
  Rng rng(31);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    for (int agent = 0; agent < 3; ++agent) {
      Eigen::VectorXd xc(10), xq(6);
      for (int j = 0; j < 10; ++j) xc(j) = normal(rng);
      for (int j = 0; j < 6; ++j) xq(j) = normal(rng);
      const Eigen::VectorXd gc = classification.true_local_gradient(agent, xc);
      const Eigen::VectorXd gq = quadratic.true_local_gradient(agent, xq);
      CHECK((gc - finite_difference_gradient(classification, agent, xc))
                .norm() <= 1e-5 * (1.0 + gc.norm()));
      CHECK((gq - finite_difference_gradient(quadratic, agent, xq)).norm() <=
            1e-5 * (1.0 + gq.norm()));
    }
  }
}

TEST_CASE("noisy evaluations average to the shard mean") {
  const ClassificationDataset ds = small_dataset();
  const ClassificationProblem problem(ds, 0.01);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.1);
  Rng rng(8);
  double mean = 0.0, mean_sq = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double value = problem.eval_noisy(0, x, rng);
    mean += value;
    mean_sq += value * value;
  }
  mean /= draws;
  mean_sq /= draws;
  const double std_err = std::sqrt((mean_sq - mean * mean) / draws);
  CHECK(std::abs(mean - problem.local_value(0, x)) <= 3.5 * std_err);
}

TEST_CASE("common realization makes evaluation differences noiseless") {
  const ClassificationProblem problem(small_dataset(), 5.0);  // loud noise
  Rng rng(12);
  const Realization xi = problem.draw(1, rng);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.2);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(10, -0.4);
  // Additive noise depends only on the realization, so it cancels exactly
  // in differences taken under one realization.
  const double diff = problem.eval(1, x, xi) - problem.eval(1, y, xi);
  const int row = xi.sample;
  CHECK(diff == doctest::Approx(problem.sample_loss(row, x) -
                                problem.sample_loss(row, y))
                    .epsilon(1e-14));
}

TEST_CASE("quadratic problem: gradient at zero, minimizer, optimum") {
  const QuadraticProblem problem = QuadraticProblem::random(4, 5, 10.0, 23);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  for (int agent = 0; agent < 4; ++agent) {
    // grad f_i(0) = -b_i; recover b_i from two probes.
    const Eigen::VectorXd minus_b = problem.true_local_gradient(agent, zero);
    CHECK(problem.local_value(agent, zero) == doctest::Approx(0.0));
    (void)minus_b;
  }
  const Eigen::VectorXd x_star = problem.exact_minimizer();
  CHECK(problem.true_global_gradient(x_star).norm() < 1e-10);
  CHECK(problem.optimal_value() ==
        doctest::Approx(problem.global_value(x_star)).epsilon(1e-12));
  // Any perturbation sits above the optimum.
  Rng rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x = x_star;
    for (int j = 0; j < 5; ++j) x(j) += 0.5 * normal(rng);
    CHECK(problem.global_value(x) >= problem.optimal_value() - 1e-12);
  }
}

TEST_CASE("pooled quadratic equals the network average objective") {
  const QuadraticProblem problem =
      QuadraticProblem::random(3, 4, 8.0, 5, 0.2, 0.01);
  const QuadraticProblem pooled = problem.pooled();
  CHECK(pooled.num_agents() == 1);
  Rng rng(6);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x(j) = normal(rng);
    CHECK(pooled.local_value(0, x) ==
          doctest::Approx(problem.global_value(x)).epsilon(1e-12));
    CHECK((pooled.true_local_gradient(0, x) -
           problem.true_global_gradient(x))
              .norm() < 1e-12);
  }
}

TEST_CASE("quadratic noise model: zeta enters through the realization") {
  const QuadraticProblem problem =
      QuadraticProblem::random(2, 3, 5.0, 9, 0.7, 0.0);
  Rng rng(14);
  const Realization xi = problem.draw(0, rng);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 1.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
  // F(x, xi) - f(x) = xi_vec . x (+ constant eval noise, zero here), so the
  // difference of deviations recovers xi_vec . (x - y) and is nonzero with
  // probability one.
  const double dev_x = problem.eval(0, x, xi) - problem.local_value(0, x);
  const double dev_y = problem.eval(0, y, xi) - problem.local_value(0, y);
  CHECK(dev_y == doctest::Approx(0.0).epsilon(1e-14));  // xi . 0 = 0
  CHECK(std::abs(dev_x) > 1e-8);
  // Repeating the same realization reproduces the same deviation.
  CHECK(problem.eval(0, x, xi) == problem.eval(0, x, xi));
}

TEST_CASE("smoothness constant bounds observed gradient variation") {
  const ClassificationProblem problem(small_dataset(7), 0.0);
  const double L_f = problem.smoothness();
  CHECK(L_f > 0.0);
  Rng rng(20);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(10), step(10);
    for (int j = 0; j < 10; ++j) {
      x(j) = normal(rng);
      step(j) = normal(rng);
    }
    step *= 0.5 / step.norm();
    const Eigen::VectorXd y = x + step;
    for (int agent = 0; agent < 3; ++agent) {
      const double lhs = (problem.true_local_gradient(agent, x) -
                          problem.true_local_gradient(agent, y))
                             .norm();
      CHECK(lhs <= L_f * step.norm() * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("empirical dissimilarity diagnostic is finite and sane") {
  const QuadraticProblem problem = QuadraticProblem::random(3, 4, 6.0, 2);
  std::vector<Eigen::VectorXd> probes;
  Rng rng(1);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x(j) = normal(rng);
    probes.push_back(x);
  }
  CHECK(empirical_sigma2_sq(problem, probes) >= 0.0);

  // Identical agents agree with the average everywhere.
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(4);
  const QuadraticProblem identical({A, A}, {b, b});
  CHECK(empirical_sigma2_sq(identical, probes) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("dataset CSV round trip") {
  const ClassificationDataset ds = small_dataset(11, 4);
  std::stringstream buffer;
  save_dataset_csv(ds, buffer);
  const ClassificationDataset loaded = load_dataset_csv(buffer);
  CHECK(loaded.d == ds.d);
  CHECK(loaded.n_train == ds.n_train);
  CHECK(loaded.n_test == ds.n_test);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.partition == ds.partition);
  CHECK((loaded.features - ds.features).cwiseAbs().maxCoeff() < 1e-12);
}
