#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "zodiac/zodiac.hpp"

using namespace zodiac;
using zodiac::testing::FunctionOracle;

namespace {

// Two agents with identically zero cost: estimates vanish and the update
// reduces to the deterministic primal-dual linear system.
FunctionOracle zero_oracle(int p, int n) {
  std::vector<FunctionOracle::Value> values;
  std::vector<FunctionOracle::Gradient> gradients;
  for (int i = 0; i < n; ++i) {
    values.emplace_back([](const Eigen::VectorXd&) { return 0.0; });
    gradients.emplace_back(
        [p](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(p); });
  }
  return FunctionOracle(p, values, gradients, 0.0);
}

EstimatorSpec central_full(int n_c) {
  EstimatorSpec spec;
  spec.kind = EstimatorKind::kCoordCentral;
  spec.n_c = n_c;
  spec.delta = DeltaSchedule::constant(0.1);
  return spec;
}

}  // namespace

TEST_CASE("hand-checked step on the two-agent path") {
  const LaplacianData lap = build_laplacian(path_topology(2));
  Eigen::MatrixXd x0(1, 2);
  x0 << 1.0, -1.0;
  NetworkState state = NetworkState::initial(x0);
  CHECK(state.v.isZero(0.0));
  const FunctionOracle oracle = zero_oracle(1, 2);
  const HyperParams hp = HyperParams::manual(1.0, 1.0, 1.0);

  // x L = (2, -2): x' = x - xL = (-1, 1), v' = xL = (2, -2).
  state = zodiac_step(state, lap, hp, central_full(1), oracle, 7);
  CHECK(state.k == 1);
  CHECK(state.x(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(state.x(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(state.v(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(state.v(0, 1) == doctest::Approx(-2.0).epsilon(1e-15));

  // Next round: x L = (-2, 2) cancels against v, freezing x while v drains.
  state = zodiac_step(state, lap, hp, central_full(1), oracle, 7);
  CHECK(state.x(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(state.x(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(state.v(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(state.v(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("consensus stationary points are fixed points") {
  const LaplacianData lap = build_laplacian(complete_topology(3));
  // f_i(x) = 0.5 ||x - 1||^2 for every agent: gradient zero at the all-ones
  // consensus state, so nothing moves.
  std::vector<FunctionOracle::Value> values;
  std::vector<FunctionOracle::Gradient> gradients;
  for (int i = 0; i < 3; ++i) {
    values.emplace_back([](const Eigen::VectorXd& x) {
      return 0.5 * (x - Eigen::VectorXd::Ones(2)).squaredNorm();
    });
    gradients.emplace_back(
        [](const Eigen::VectorXd& x) { return x - Eigen::VectorXd::Ones(2); });
  }
  const FunctionOracle oracle(2, values, gradients, 1.0);
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Ones(2, 3);
  NetworkState state = NetworkState::initial(x0);
  const HyperParams hp = HyperParams::manual(0.5, 0.5, 0.1);
  for (int k = 0; k < 5; ++k)
    state = zodiac_step(state, lap, hp, central_full(2), oracle, 11);
  CHECK((state.x - x0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(state.v.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dual iterates always sum to zero across agents") {
  const LaplacianData lap = build_laplacian(gen_erdos_renyi(6, 0.5, 13));
  const QuadraticProblem problem =
      QuadraticProblem::random(6, 3, 8.0, 29, 0.3, 0.01);
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(3, 6);
  NetworkState state = NetworkState::initial(x0);
  const HyperParams hp = theorem_schedule(lap, 3, 6, 2000);
  EstimatorSpec spec = central_full(1);
  spec.delta = DeltaSchedule::theorem_decay(1.0);
  for (int k = 0; k < 50; ++k) {
    state = zodiac_step(state, lap, hp, spec, problem, 17);
    const Eigen::VectorXd dual_sum = state.v.rowwise().sum();
    const double scale =
        1.0 + state.v.colwise().norm().maxCoeff();
    CHECK(dual_sum.norm() <= 1e-8 * scale);
  }
}

TEST_CASE("steps are deterministic and depend on the iteration index") {
  const LaplacianData lap = build_laplacian(path_topology(3));
  const QuadraticProblem problem =
      QuadraticProblem::random(3, 2, 5.0, 31, 0.5, 0.02);
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Constant(2, 3, 0.4);
  const NetworkState state = NetworkState::initial(x0);
  const HyperParams hp = HyperParams::manual(1.0, 0.5, 0.01);
  EstimatorSpec spec = central_full(1);

  StepRecord rec_a, rec_b;
  const NetworkState next_a =
      zodiac_step(state, lap, hp, spec, problem, 21, &rec_a);
  const NetworkState next_b =
      zodiac_step(state, lap, hp, spec, problem, 21, &rec_b);
  CHECK(next_a.x == next_b.x);
  CHECK(next_a.v == next_b.v);
  CHECK(rec_a.estimates == rec_b.estimates);

  // A different master seed or a different iteration index redraws the noise.
  const NetworkState other_seed = zodiac_step(state, lap, hp, spec, problem, 22);
  CHECK(next_a.x != other_seed.x);
  NetworkState shifted = state;
  shifted.k = 5;
  const NetworkState other_k = zodiac_step(shifted, lap, hp, spec, problem, 21);
  CHECK(next_a.x != other_k.x);
}

TEST_CASE("two-node schedule bounds by hand") {
  const LaplacianData lap = build_laplacian(path_topology(2));
  CHECK(kappa2_upper_bound(lap, 2.0) == doctest::Approx(1.0 / 39.0).epsilon(1e-14));

  const HyperParams hp = theorem_schedule(lap, 2, 2, 5000);
  CHECK(hp.kappa1 == doctest::Approx(2.0));  // 1/rho2 + 1.5
  CHECK(hp.kappa2 == doctest::Approx(0.9 / 39.0));
  CHECK(hp.beta ==
        doctest::Approx(hp.kappa2 * std::sqrt(2.0 * 5000.0 / 2.0)));
  CHECK(hp.alpha == doctest::Approx(hp.kappa1 * hp.beta));
  CHECK(hp.eta == doctest::Approx(hp.kappa2 / hp.beta));
  // eta = sqrt(n/(pT)) independently of the kappas.
  CHECK(hp.eta == doctest::Approx(std::sqrt(2.0 / (2.0 * 5000.0))));

  std::string why;
  CHECK(validate_schedule(hp, lap, 2, 2, &why));

  SUBCASE("tampered parameters are caught") {
    HyperParams bad = hp;
    bad.alpha *= 1.01;
    CHECK_FALSE(validate_schedule(bad, lap, 2, 2, &why));
    CHECK(why == "alpha != kappa1 beta");
  }
  SUBCASE("manual parameters are not a theorem schedule") {
    CHECK_FALSE(
        validate_schedule(HyperParams::manual(4.0, 3.0, 0.08), lap, 2, 2, &why));
    CHECK(why == "not in schedule mode");
  }
}

TEST_CASE("schedule constructor rejects out-of-range constants") {
  const LaplacianData lap = build_laplacian(path_topology(2));
  CHECK_THROWS_AS(theorem_schedule(lap, 2, 2, 1000, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(theorem_schedule(lap, 2, 2, 1000, 1.2), std::invalid_argument);
  CHECK_THROWS_AS(theorem_schedule(lap, 2, 2, 1000, 2.0, 1.0 / 39.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(theorem_schedule(lap, 2, 2, 1000, 2.0, -0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(theorem_schedule(lap, 2, 2, 0), std::invalid_argument);
  CHECK_NOTHROW(theorem_schedule(lap, 2, 2, 1000, 2.0, 0.02));
  // T below n^3/p only warns; the parameters still come out usable.
  CHECK_NOTHROW(theorem_schedule(lap, 2, 2, 3));

  const LaplacianData disconnected = build_laplacian(Topology(3));
  CHECK_THROWS_AS(theorem_schedule(disconnected, 2, 3, 1000),
                  std::invalid_argument);
}

TEST_CASE("small quadratic run reaches the centralized-descent optimum") {
  // Noiseless two-agent quadratic on a path, exact central estimates, the
  // decaying-step schedule, T = 5000.
  const int p = 2, n = 2;
  const QuadraticProblem problem = QuadraticProblem::random(n, p, 10.0, 47);
  const LaplacianData lap = build_laplacian(path_topology(n));
  const HyperParams hp = theorem_schedule(lap, p, n, 5000);
  EstimatorSpec spec = central_full(p);
  spec.delta = DeltaSchedule::theorem_decay(1.0);

  NetworkState state = NetworkState::initial(Eigen::MatrixXd::Zero(p, n));
  for (int k = 0; k < 5000; ++k)
    state = zodiac_step(state, lap, hp, spec, problem, 1);

  // Reference: plain gradient descent on f run to (numerical) optimality.
  Eigen::VectorXd x_gd = Eigen::VectorXd::Zero(p);
  const double gd_step = 1.0 / problem.smoothness();
  for (int k = 0; k < 200000; ++k) {
    const Eigen::VectorXd g = problem.true_global_gradient(x_gd);
    if (g.norm() < 1e-13) break;
    x_gd -= gd_step * g;
  }
  CHECK(problem.true_global_gradient(x_gd).squaredNorm() < 1e-20);
  CHECK((x_gd - problem.exact_minimizer()).norm() < 1e-8);

  const Eigen::VectorXd x_bar = state.mean_x();
  const double grad_sq = problem.true_global_gradient(x_bar).squaredNorm();
  const double consensus =
      (state.x.colwise() - x_bar).squaredNorm() / static_cast<double>(n);
  CHECK(grad_sq <= 1e-4);
  CHECK(consensus <= 1e-4);
  CHECK((x_bar - x_gd).norm() < 0.05);
}

TEST_CASE("divergence guard reports the first bad entry") {
  Eigen::MatrixXd healthy = Eigen::MatrixXd::Constant(2, 3, 5.0);
  CHECK_FALSE(divergence_reason(healthy).has_value());

  Eigen::MatrixXd big = healthy;
  big(1, 2) = 2e12;
  const auto big_reason = divergence_reason(big);
  REQUIRE(big_reason.has_value());
  CHECK(big_reason->find("coordinate 1") != std::string::npos);
  CHECK(big_reason->find("agent 2") != std::string::npos);

  Eigen::MatrixXd nan = healthy;
  nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  const auto nan_reason = divergence_reason(nan);
  REQUIRE(nan_reason.has_value());
  CHECK(nan_reason->find("non-finite") != std::string::npos);
}

TEST_CASE("step validates shapes and parameters") {
  const LaplacianData lap = build_laplacian(path_topology(2));
  const FunctionOracle oracle = zero_oracle(1, 2);
  NetworkState state = NetworkState::initial(Eigen::MatrixXd::Zero(1, 2));
  CHECK_THROWS_AS(zodiac_step(state, build_laplacian(path_topology(3)),
                              HyperParams::manual(1, 1, 1), central_full(1),
                              oracle, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(HyperParams::manual(0.0, 1.0, 1.0), std::invalid_argument);
  NetworkState bad_v = state;
  bad_v.v = Eigen::MatrixXd::Zero(1, 3);
  CHECK_THROWS_AS(zodiac_step(bad_v, lap, HyperParams::manual(1, 1, 1),
                              central_full(1), oracle, 1),
                  std::invalid_argument);
}
