#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "decsaddle/compression.hpp"
#include "decsaddle/core.hpp"
#include "decsaddle/oracles.hpp"
#include "decsaddle/problem.hpp"
#include "decsaddle/rng.hpp"
#include "decsaddle/topology.hpp"

namespace decsaddle {

/// Stacked iterates, dual-tracking vectors and COMM references of all nodes.
template <typename Scalar>
struct NodeEnsemble {
  Stack<Scalar> x;
  Stack<Scalar> y;
  Stack<Scalar> Dx;
  Stack<Scalar> Dy;
  CommState<Scalar> comm_x;
  CommState<Scalar> comm_y;

  /// D = 0 and H = (x, y), the state every run and every restart starts from.
  static NodeEnsemble start(const DecGraph<Scalar>& g, Stack<Scalar> x, Stack<Scalar> y) {
    NodeEnsemble e;
    e.Dx = Stack<Scalar>::Zero(x.rows(), x.cols());
    e.Dy = Stack<Scalar>::Zero(y.rows(), y.cols());
    e.comm_x = CommState<Scalar>::from_reference(g, x);
    e.comm_y = CommState<Scalar>::from_reference(g, y);
    e.x = std::move(x);
    e.y = std::move(y);
    return e;
  }

  [[nodiscard]] Index nodes() const { return x.cols(); }
};

/// Every node starts from the same point.
template <typename Scalar>
NodeEnsemble<Scalar> replicate(const DecGraph<Scalar>& g, const PrimalDualPoint<Scalar>& z) {
  return NodeEnsemble<Scalar>::start(g, z.x.replicate(1, g.nodes()), z.y.replicate(1, g.nodes()));
}

/// One named window check of a parameter set.
struct WindowCheck {
  std::string name;
  double value = 0;
  double lower = 0;
  double upper = 0;
  bool lower_inclusive = false;
  bool upper_inclusive = false;
  bool ok = false;
};

using FeasibilityReport = std::vector<WindowCheck>;

inline WindowCheck open_window(std::string name, double value, double lower, double upper) {
  return WindowCheck{std::move(name), value, lower, upper, false, false, value > lower && value < upper};
}

inline bool all_ok(const FeasibilityReport& report) {
  for (const auto& c : report)
    if (!c.ok) return false;
  return true;
}

/// Throws InfeasibleParameters naming the first failed window.
inline void require_feasible(const FeasibilityReport& report, const std::string& context) {
  for (const auto& c : report) {
    if (!c.ok) {
      throw InfeasibleParameters(context + ": " + c.name + " = " + std::to_string(c.value) + " is outside (" +
                                 std::to_string(c.lower) + ", " + std::to_string(c.upper) + ")");
    }
  }
}

template <typename Scalar>
struct StepParams {
  Scalar s = 0;
  Scalar gamma_x = 0;
  Scalar gamma_y = 0;
  Scalar alpha_x = 0;
  Scalar alpha_y = 0;
};

/// Windows on (s, gamma, alpha) for compression factor delta. On a single
/// node gamma multiplies I - W = 0, so it is only required to be >= 0.
template <typename Scalar>
FeasibilityReport step_windows(const StepParams<Scalar>& p, Scalar delta, const SpectralInfo<Scalar>& spec) {
  const double inf = std::numeric_limits<double>::infinity();
  const double d = static_cast<double>(delta);
  const double sd = std::sqrt(d);
  FeasibilityReport r;
  r.push_back(open_window("s", static_cast<double>(p.s), 0.0, inf));
  const char* blocks[] = {"x", "y"};
  const Scalar alphas[] = {p.alpha_x, p.alpha_y};
  const Scalar gammas[] = {p.gamma_x, p.gamma_y};
  for (int k = 0; k < 2; ++k) {
    const double a = static_cast<double>(alphas[k]);
    const double gm = static_cast<double>(gammas[k]);
    r.push_back(open_window(std::string("alpha_") + blocks[k], a, 0.0, 1.0 / (1.0 + d)));
    if (spec.trivial()) {
      WindowCheck c{std::string("gamma_") + blocks[k], gm, 0.0, inf, true, false, gm >= 0.0 && std::isfinite(gm)};
      r.push_back(c);
      continue;
    }
    const double lmax = static_cast<double>(spec.lambda_max);
    double upper = (2.0 - 2.0 * sd * a) / lmax;
    if (d > 0) upper = std::min(upper, (a - (1.0 + d) * a * a) / (sd * lmax));
    r.push_back(open_window(std::string("gamma_") + blocks[k], gm, 0.0, upper));
    r.push_back(open_window(std::string("gamma_") + blocks[k] + "*lambda_second/2", gm * static_cast<double>(spec.lambda_second_smallest) / 2.0,
                            0.0, 1.0));
  }
  return r;
}

/// What one step cost.
struct StepCost {
  std::uint64_t grad_units = 0;
  std::uint64_t comm_rounds = 0;
  std::uint64_t bits = 0;
};

inline void charge(CostCounters& c, const StepCost& s) {
  c.grad_units += s.grad_units;
  c.comm_rounds += s.comm_rounds;
  c.bits += s.bits;
}

/// One synchronized IPDHG iteration, in place.
///
/// Both oracle blocks are evaluated at the current (x, y) before either block
/// moves. Node i draws its oracle, x-compression and y-compression randomness
/// from the streams of `iteration` so results do not depend on node order.
template <SaddleProblem P, typename Oracle>
StepCost ipdhg_step(NodeEnsemble<typename P::Scalar>& ens, const StepParams<typename P::Scalar>& params,
                    const DecGraph<typename P::Scalar>& g, const Oracle& oracle, const P& problem,
                    const Compressor<typename P::Scalar>& c, const SeedTree& iteration) {
  using Scalar = typename P::Scalar;
  const Index m = g.nodes();
  const Scalar s = params.s;

  Stack<Scalar> gx(problem.dim_x(), m);
  Stack<Scalar> gy(problem.dim_y(), m);
  const SeedTree oracle_streams = branch(iteration, Stream::kOracle);
  for (Index i = 0; i < m; ++i) {
    Engine rng = oracle_streams.engine(static_cast<std::uint64_t>(i));
    auto grad = oracle(i, ens.x.col(i).eval(), ens.y.col(i).eval(), rng);
    gx.col(i) = grad.gx;
    gy.col(i) = grad.gy;
  }

  const Stack<Scalar> nu_x = ens.x - s * gx - s * ens.Dx;
  const auto ex = comm_step(nu_x, ens.comm_x, params.alpha_x, g, c, branch(iteration, Stream::kCompressX));
  const Stack<Scalar> gap_x = ex.nu_hat - ex.nu_hat_w;
  ens.Dx += (params.gamma_x / (2 * s)) * gap_x;
  const Stack<Scalar> x_hat = nu_x - (params.gamma_x / 2) * gap_x;
  for (Index i = 0; i < m; ++i) ens.x.col(i) = problem.prox_primal(x_hat.col(i), s);

  const Stack<Scalar> nu_y = ens.y + s * gy - s * ens.Dy;
  const auto ey = comm_step(nu_y, ens.comm_y, params.alpha_y, g, c, branch(iteration, Stream::kCompressY));
  const Stack<Scalar> gap_y = ey.nu_hat - ey.nu_hat_w;
  ens.Dy += (params.gamma_y / (2 * s)) * gap_y;
  const Stack<Scalar> y_hat = nu_y - (params.gamma_y / 2) * gap_y;
  for (Index i = 0; i < m; ++i) ens.y.col(i) = problem.prox_dual(y_hat.col(i), s);

  StepCost cost;
  cost.grad_units = static_cast<std::uint64_t>(m) * units_per_call(oracle);
  cost.comm_rounds = 1;
  cost.bits = c.payload_bits(static_cast<std::uint64_t>(m * (problem.dim_x() + problem.dim_y())));
  return cost;
}

}  // namespace decsaddle
