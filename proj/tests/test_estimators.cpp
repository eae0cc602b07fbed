#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <map>
#include <numeric>

#include "support.hpp"
#include "zodiac/estimators.hpp"

using namespace zodiac;
using zodiac::testing::FunctionOracle;
using zodiac::testing::linear_oracle;

namespace {

std::vector<int> full_set(int p) {
  std::vector<int> coords(p);
  std::iota(coords.begin(), coords.end(), 0);
  return coords;
}

}  // namespace

TEST_CASE("forward differences are exact on linear functions") {
  Eigen::VectorXd a(3);
  a << 1.0, 2.0, 3.0;
  const FunctionOracle oracle = linear_oracle(a);
  Rng rng(1);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.7);
  for (double delta : {1.0, 0.1, 1e-3}) {
    const Eigen::VectorXd g =
        estimate_forward(oracle, 0, x, full_set(3), delta, rng);
    CHECK((g - a).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("forward difference on x^2 at x=1 with delta 0.1 gives 2.1") {
  const FunctionOracle oracle(
      1, [](const Eigen::VectorXd& x) { return x(0) * x(0); },
      [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 2 * x(0)); });
  Rng rng(1);
  const Eigen::VectorXd g = estimate_forward(
      oracle, 0, Eigen::VectorXd::Ones(1), full_set(1), 0.1, rng);
  CHECK(g(0) == doctest::Approx(2.1).epsilon(1e-12));
}

TEST_CASE("central differences are exact on quadratics") {
  const QuadraticProblem problem = QuadraticProblem::random(2, 4, 10.0, 13);
  Rng rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x(j) = normal(rng);
    for (double delta : {0.5, 0.01}) {
      const Eigen::VectorXd g =
          estimate_central(problem, 1, x, full_set(4), delta, rng);
      const Eigen::VectorXd truth = problem.true_local_gradient(1, x);
      CHECK((g - truth).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("central difference on x^2 at x=1 with delta 0.1 gives 2.0") {
  const FunctionOracle oracle(
      1, [](const Eigen::VectorXd& x) { return x(0) * x(0); },
      [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 2 * x(0)); });
  Rng rng(1);
  const Eigen::VectorXd g = estimate_central(
      oracle, 0, Eigen::VectorXd::Ones(1), full_set(1), 0.1, rng);
  CHECK(g(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("central error on a cubic shrinks quadratically in delta") {
  const FunctionOracle oracle(
      1, [](const Eigen::VectorXd& x) { return x(0) * x(0) * x(0); },
      [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, 3 * x(0) * x(0));
      });
  Rng rng(1);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  auto error_at = [&](double delta) {
    return std::abs(
        estimate_central(oracle, 0, x, full_set(1), delta, rng)(0) - 3.0);
  };
  const double ratio = error_at(1e-2) / error_at(1e-3);
  CHECK(ratio == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("gaussian two-point estimator") {
  Eigen::VectorXd a(4);
  a << -1.0, 0.5, 2.0, 0.0;
  const FunctionOracle oracle = linear_oracle(a);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(4);

  SUBCASE("constant function gives the zero vector") {
    const FunctionOracle constant(
        4, [](const Eigen::VectorXd&) { return 3.5; },
        [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(4); });
    Rng rng(5);
    CHECK(estimate_gaussian_two_point(constant, 0, x, 0.01, rng).isZero(0.0));
  }

  SUBCASE("single draw equals (a.u) u on a linear function") {
    // The direction is drawn first, as four standard normals; replaying the
    // stream reveals it.
    Rng replay(77);
    std::normal_distribution<double> normal;
    Eigen::VectorXd u(4);
    for (int j = 0; j < 4; ++j) u(j) = normal(replay);
    Rng rng(77);
    const Eigen::VectorXd g =
        estimate_gaussian_two_point(oracle, 0, x, 0.5, rng);
    CHECK((g - a.dot(u) * u).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("monte-carlo mean approaches the gradient") {
    Rng rng(6);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i)
      mean += estimate_gaussian_two_point(oracle, 0, x, 1e-6, rng);
    mean /= draws;
    CHECK((mean - a).norm() < 0.05 * (1.0 + a.norm()));
  }
}

TEST_CASE("coordinate subset sampling") {
  Rng rng(3);
  SUBCASE("full budget returns every coordinate") {
    for (int trial = 0; trial < 10; ++trial) {
      CHECK(sample_coordinates(5, 5, rng) == full_set(5));
    }
  }
  SUBCASE("subsets are ascending and duplicate-free") {
    for (int trial = 0; trial < 1000; ++trial) {
      const std::vector<int> coords = sample_coordinates(7, 3, rng);
      REQUIRE(coords.size() == 3);
      CHECK(coords[0] < coords[1]);
      CHECK(coords[1] < coords[2]);
      CHECK(coords[0] >= 0);
      CHECK(coords[2] < 7);
    }
  }
  SUBCASE("singletons from p=3 are uniform") {
    std::array<int, 3> counts{};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[sample_coordinates(3, 1, rng)[0]];
    for (int j = 0; j < 3; ++j)
      CHECK(counts[j] / static_cast<double>(draws) ==
            doctest::Approx(1.0 / 3.0).epsilon(0.03));
  }
  SUBCASE("pairs from p=4 are uniform over all 6 subsets") {
    std::map<std::pair<int, int>, int> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const std::vector<int> coords = sample_coordinates(4, 2, rng);
      ++counts[{coords[0], coords[1]}];
    }
    REQUIRE(counts.size() == 6);
    double chi_sq = 0.0;
    const double expected = draws / 6.0;
    for (const auto& [pair, count] : counts) {
      const double dev = count - expected;
      chi_sq += dev * dev / expected;
    }
    CHECK(chi_sq < 20.5);  // chi-squared(5) at the 0.1% level
  }
  SUBCASE("budget larger than dimension is rejected") {
    CHECK_THROWS_AS(sample_coordinates(3, 4, rng), std::invalid_argument);
  }
}

TEST_CASE("oracle call accounting") {
  const QuadraticProblem problem = QuadraticProblem::random(1, 5, 4.0, 7);
  CountingOracle counted(problem);
  Rng rng(9);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(5);

  estimate_forward(counted, 0, x, full_set(3), 0.1, rng);
  CHECK(counted.calls() == 4);  // n_c + 1
  counted.reset();
  estimate_central(counted, 0, x, full_set(3), 0.1, rng);
  CHECK(counted.calls() == 6);  // 2 n_c
  counted.reset();
  estimate_gaussian_two_point(counted, 0, x, 0.1, rng);
  CHECK(counted.calls() == 2);

  EstimatorSpec spec;
  spec.kind = EstimatorKind::kCoordForward;
  spec.n_c = 3;
  CHECK(oracle_calls_per_estimate(spec) == 4);
  spec.kind = EstimatorKind::kCoordCentral;
  CHECK(oracle_calls_per_estimate(spec) == 6);
  spec.kind = EstimatorKind::kGaussianTwoPoint;
  CHECK(oracle_calls_per_estimate(spec) == 2);
}

TEST_CASE("estimates are deterministic under the rng seed") {
  const QuadraticProblem problem =
      QuadraticProblem::random(2, 6, 10.0, 19, 0.4, 0.02);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(6, 0.25);
  EstimatorSpec spec;
  spec.kind = EstimatorKind::kCoordCentral;
  spec.n_c = 2;
  spec.delta = DeltaSchedule::constant(0.05);
  Rng rng_a(41), rng_b(41);
  const Eigen::VectorXd a = estimate(spec, problem, 1, x, 3, 2, rng_a);
  const Eigen::VectorXd b = estimate(spec, problem, 1, x, 3, 2, rng_b);
  CHECK(a == b);
}

TEST_CASE("common randomness cancels additive evaluation noise") {
  // Huge evaluation noise, no gradient noise: with a shared realization the
  // central difference still recovers the exact gradient.
  const QuadraticProblem problem =
      QuadraticProblem::random(1, 4, 6.0, 3, 0.0, 50.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(4, -0.5);
  const Eigen::VectorXd truth = problem.true_local_gradient(0, x);
  Rng rng(10);
  const Eigen::VectorXd shared =
      estimate_central(problem, 0, x, full_set(4), 0.01, rng, true);
  CHECK((shared - truth).cwiseAbs().maxCoeff() < 1e-9);
  // Independent realizations leave the noise in.
  const Eigen::VectorXd fresh =
      estimate_central(problem, 0, x, full_set(4), 0.01, rng, false);
  CHECK((fresh - truth).cwiseAbs().maxCoeff() > 1.0);
}

TEST_CASE("smoothing schedules") {
  CHECK(delta_at(DeltaSchedule::theorem_decay(1.0), 0, 1, 1) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(delta_at(DeltaSchedule::theorem_decay(1.0), 0, 16, 1) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(delta_at(DeltaSchedule::theorem_decay(2.0), 3, 2, 2) ==
        doctest::Approx(2.0 / 2.0).epsilon(1e-14));  // (2*2*4)^{1/4} = 2
  CHECK(delta_at(DeltaSchedule::fixed_experiment(50000, 100), 123, 100, 10) ==
        doctest::Approx(10.0 / std::sqrt(5e6)).epsilon(1e-14));
  CHECK(delta_at(DeltaSchedule::constant(1e-3), 7, 4, 4) == 1e-3);
  CHECK_THROWS_AS(DeltaSchedule::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DeltaSchedule::theorem_decay(-1.0), std::invalid_argument);
}

TEST_CASE("second-moment bound formula") {
  CHECK(variance_bound(5.0, 1, 1, 0.0, 0.0, 10.0, 0.0) == 0.0);
  CHECK(variance_bound(1.0, 2, 1, 1.0, 2.0, 0.0, 0.0) ==
        doctest::Approx(22.0).epsilon(1e-14));
  // Monotone in each noise scalar.
  const double base = variance_bound(1.0, 4, 2, 0.1, 0.2, 3.0, 0.05);
  CHECK(variance_bound(2.0, 4, 2, 0.1, 0.2, 3.0, 0.05) > base);
  CHECK(variance_bound(1.0, 4, 2, 0.2, 0.2, 3.0, 0.05) > base);
  CHECK(variance_bound(1.0, 4, 2, 0.1, 0.4, 3.0, 0.05) > base);
  CHECK(variance_bound(1.0, 4, 2, 0.1, 0.2, 3.0, 0.10) > base);
  CHECK(variance_bound(1.0, 4, 1, 0.1, 0.2, 3.0, 0.05) > base);
}

TEST_CASE("dispatch draws subsets and applies the schedule") {
  Eigen::VectorXd a(3);
  a << 1.0, 2.0, 3.0;
  const FunctionOracle oracle = linear_oracle(a);
  EstimatorSpec spec;
  spec.kind = EstimatorKind::kCoordForward;
  spec.n_c = 3;
  spec.delta = DeltaSchedule::constant(0.2);
  Rng rng(55);
  const Eigen::VectorXd g =
      estimate(spec, oracle, 0, Eigen::VectorXd::Zero(3), 0, 1, rng);
  CHECK((g - a).cwiseAbs().maxCoeff() < 1e-10);

  // n_c = 1 on the linear function yields (p a_j) e_j for some j.
  spec.n_c = 1;
  bool seen_scaled_axis = false;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd single =
        estimate(spec, oracle, 0, Eigen::VectorXd::Zero(3), trial, 1, rng);
    int nonzeros = 0, axis = -1;
    for (int j = 0; j < 3; ++j)
      if (single(j) != 0.0) {
        ++nonzeros;
        axis = j;
      }
    REQUIRE(nonzeros == 1);
    CHECK(single(axis) == doctest::Approx(3.0 * a(axis)).epsilon(1e-10));
    seen_scaled_axis = true;
  }
  CHECK(seen_scaled_axis);
}
