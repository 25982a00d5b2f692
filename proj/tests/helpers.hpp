#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "decsaddle/data.hpp"
#include "decsaddle/problem.hpp"
#include "decsaddle/solvers.hpp"

namespace testing {

using namespace decsaddle;

inline RobustLRProblem<double> synthetic_problem(Index N, Index d, Index m, Index n, RobustLRParams<double> params,
                                                 std::uint64_t seed = 1) {
  const auto ds = synthesize(N, d, seed);
  return make_robust_lr<double>(ds, partition(ds, m, n, seed), params);
}

inline Eigen::VectorXd gaussian(Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(d);
  for (Index i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

// Uniform point in the l2 ball of radius r.
inline Eigen::VectorXd in_ball(Index d, double r, std::mt19937_64& rng) {
  Eigen::VectorXd v = gaussian(d, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return v.normalized() * r * std::pow(u(rng), 1.0 / static_cast<double>(d));
}

// Accurate saddle point of the problem built on `ds`, via its single-node version.
inline PrimalDualPoint<double> saddle_point(const Dataset& ds, RobustLRParams<double> params, double tol = 1e-28) {
  const auto single = make_robust_lr<double>(ds, partition(ds, 1, 1, 0), params);
  ReferenceOptions<double> opt;
  opt.tolerance = tol;
  opt.max_iterations = 200000;
  return compute_reference(single, opt).z;
}

}  // namespace testing
