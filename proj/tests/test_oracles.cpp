#include <cmath>
#include <random>

#include "decsaddle/oracles.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace decsaddle;
using testing::in_ball;

TEST_CASE("minibatch oracle with one batch is the full gradient") {
  const auto p = testing::synthetic_problem(30, 4, 3, 1, {1.0, 1.0, 2.0, 1.0});
  const Gsgo<RobustLRProblem<double>> oracle(p);
  Engine rng(1);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 0.2);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(4, -0.1);
  for (Index i = 0; i < 3; ++i) {
    const auto a = oracle(i, x, y, rng);
    const auto b = p.grad_full(i, x, y);
    CHECK(a.gx == b.gx);
    CHECK(a.gy == b.gy);
  }
  CHECK(units_per_call(oracle) == 1);
}

TEST_CASE("minibatch oracle is unbiased") {
  const Index n = 4;
  const auto p = testing::synthetic_problem(40, 3, 2, n, {1.0, 1.0, 2.0, 1.0}, 3);
  const Gsgo<RobustLRProblem<double>> oracle(p);
  std::mt19937_64 gen(2);
  const Eigen::VectorXd x = in_ball(3, 2.0, gen);
  const Eigen::VectorXd y = in_ball(3, 1.0, gen);
  const auto full = p.grad_full(0, x, y);

  // Per-coordinate standard deviation of one draw, from the batch spread.
  Eigen::VectorXd var = Eigen::VectorXd::Zero(6);
  for (Index j = 0; j < n; ++j) {
    const auto g = p.grad_batch(0, j, x, y);
    Eigen::VectorXd diff(6);
    diff << g.gx - full.gx, g.gy - full.gy;
    var += diff.cwiseAbs2() / static_cast<double>(n);
  }

  const int draws = 100000;
  Engine rng(7);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
  for (int k = 0; k < draws; ++k) {
    const auto g = oracle(0, x, y, rng);
    mean.head(3) += g.gx;
    mean.tail(3) += g.gy;
  }
  mean /= draws;
  Eigen::VectorXd expected(6);
  expected << full.gx, full.gy;
  for (Index c = 0; c < 6; ++c) CHECK(std::abs(mean(c) - expected(c)) <= 3 * std::sqrt(var(c) / draws) + 1e-15);
}

TEST_CASE("minibatch oracle is deterministic in its engine") {
  const auto p = testing::synthetic_problem(40, 3, 2, 5, {1.0, 1.0, 2.0, 1.0});
  const Gsgo<RobustLRProblem<double>> oracle(p);
  Engine a(99), b(99);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(3, 0.5);
  for (int k = 0; k < 50; ++k) CHECK(oracle(1, z, z, a).gx == oracle(1, z, z, b).gx);
}

TEST_CASE("exact oracle costs n units") {
  const auto p = testing::synthetic_problem(40, 3, 2, 5, {1.0, 1.0, 2.0, 1.0});
  const ExactOracle<RobustLRProblem<double>> oracle(p);
  CHECK(units_per_call(oracle) == 5);
}

namespace {

struct SvrgFixture {
  RobustLRProblem<double> p = testing::synthetic_problem(48, 3, 3, 4, {1.0, 2.0, 2.0, 1.0}, 5);
  CostCounters cost;
  Stack<double> x = Stack<double>::Constant(3, 3, 0.3);
  Stack<double> y = Stack<double>::Constant(3, 3, -0.2);
};

}  // namespace

TEST_CASE("variance-reduced oracle is exact at its reference") {
  SvrgFixture f;
  const auto st = make_svrg_state(f.p, f.x, f.y, 0.25, uniform_distribution<double>(3, 4), f.cost);
  CHECK(f.cost.grad_units == 12);
  const Svrgo<RobustLRProblem<double>> oracle(f.p, st);
  CHECK(units_per_call(oracle) == 2);
  for (Index i = 0; i < 3; ++i) {
    const auto full = f.p.grad_full(i, f.x.col(i), f.y.col(i));
    for (Index l = 0; l < 4; ++l) {
      const auto g = oracle.estimate(i, l, f.x.col(i), f.y.col(i));
      CHECK(g.gx == full.gx);
      CHECK(g.gy == full.gy);
    }
  }
}

TEST_CASE("variance-reduced oracle enumerates to the full gradient") {
  SvrgFixture f;
  const std::vector<std::vector<double>> law = {{0.1, 0.2, 0.3, 0.4}, {0.25, 0.25, 0.25, 0.25}, {0.7, 0.1, 0.1, 0.1}};
  const auto st = make_svrg_state(f.p, f.x, f.y, 0.5, law, f.cost);
  CHECK(st.p_min == 0.1);
  const Svrgo<RobustLRProblem<double>> oracle(f.p, st);
  std::mt19937_64 gen(4);
  for (int probe = 0; probe < 20; ++probe) {
    const Index i = probe % 3;
    const Eigen::VectorXd x = in_ball(3, 2.0, gen);
    const Eigen::VectorXd y = in_ball(3, 1.0, gen);
    Eigen::VectorXd ex = Eigen::VectorXd::Zero(3), ey = Eigen::VectorXd::Zero(3);
    for (Index l = 0; l < 4; ++l) {
      const auto g = oracle.estimate(i, l, x, y);
      ex += law[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * g.gx;
      ey += law[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * g.gy;
    }
    const auto full = f.p.grad_full(i, x, y);
    CHECK((ex - full.gx).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK((ey - full.gy).lpNorm<Eigen::Infinity>() <= 1e-14);
  }
}

TEST_CASE("uniform law gives the classical estimator") {
  SvrgFixture f;
  const auto st = make_svrg_state(f.p, f.x, f.y, 0.5, uniform_distribution<double>(3, 4), f.cost);
  const Svrgo<RobustLRProblem<double>> oracle(f.p, st);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, -0.4);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(3, 0.6);
  for (Index l = 0; l < 4; ++l) {
    const auto g = oracle.estimate(2, l, x, y);
    const auto now = f.p.grad_batch(2, l, x, y);
    const auto ref = f.p.grad_batch(2, l, f.x.col(2), f.y.col(2));
    const auto anchor = f.p.grad_full(2, f.x.col(2), f.y.col(2));
    CHECK((g.gx - (now.gx - ref.gx + anchor.gx)).norm() <= 1e-15);
    CHECK((g.gy - (now.gy - ref.gy + anchor.gy)).norm() <= 1e-15);
  }
}

TEST_CASE("reference probability and sampling law are validated") {
  SvrgFixture f;
  CHECK_THROWS_AS(make_svrg_state(f.p, f.x, f.y, 0.0, uniform_distribution<double>(3, 4), f.cost), InfeasibleParameters);
  CHECK_THROWS_AS(make_svrg_state(f.p, f.x, f.y, 1.5, uniform_distribution<double>(3, 4), f.cost), InfeasibleParameters);
  CHECK_THROWS(make_svrg_state(f.p, f.x, f.y, 0.5, uniform_distribution<double>(2, 4), f.cost));
  CHECK_THROWS(make_svrg_state(f.p, f.x, f.y, 0.5, {{0.5, 0.5, 0, 0}, {0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}}, f.cost));
  CHECK_THROWS(make_svrg_state(f.p, f.x, f.y, 0.5, {{0.5, 0.5, 0.5, 0.5}, {0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}}, f.cost));
}

TEST_CASE("reference update frequency") {
  SvrgFixture f;
  auto st = make_svrg_state(f.p, f.x, f.y, 0.1, uniform_distribution<double>(3, 4), f.cost);
  const CostCounters start = f.cost;
  Engine rng(31);
  const int steps = 10000;
  for (int t = 0; t < steps; ++t) svrgo_update_reference(f.p, st, f.x, f.y, rng, f.cost);
  const double sigma = std::sqrt(steps * 0.1 * 0.9);
  CHECK(std::abs(static_cast<double>(st.refreshes) - 1000.0) <= 3 * sigma);
  CHECK(f.cost.grad_units - start.grad_units == st.refreshes * 12);
}

TEST_CASE("p = 1 always moves the reference") {
  SvrgFixture f;
  auto st = make_svrg_state(f.p, f.x, f.y, 1.0, uniform_distribution<double>(3, 4), f.cost);
  Engine rng(1);
  Stack<double> x = f.x;
  for (int t = 0; t < 20; ++t) {
    x.array() += 0.01;
    CHECK(svrgo_update_reference(f.p, st, x, f.y, rng, f.cost));
    CHECK(st.x_tilde == x);
  }
  CHECK(st.refreshes == 20);
}
