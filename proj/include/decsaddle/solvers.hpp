#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "decsaddle/compression.hpp"
#include "decsaddle/core.hpp"
#include "decsaddle/ipdhg.hpp"
#include "decsaddle/metrics.hpp"
#include "decsaddle/oracles.hpp"
#include "decsaddle/problem.hpp"
#include "decsaddle/rng.hpp"
#include "decsaddle/topology.hpp"

namespace decsaddle {

namespace detail {

// 1 - sqrt(delta) alpha / (1 - gamma lambda_max / 2).
template <typename Scalar>
Scalar lyapunov_m(Scalar delta, Scalar alpha, Scalar gamma, const SpectralInfo<Scalar>& spec) {
  return Scalar(1) - std::sqrt(delta) * alpha / (Scalar(1) - gamma * spec.lambda_max / 2);
}

template <typename Scalar>
void push_common_windows(FeasibilityReport& r, Scalar b_x, Scalar b_y, Scalar M_x, Scalar M_y, Scalar delta,
                         const StepParams<Scalar>& step, const SpectralInfo<Scalar>& spec) {
  r.push_back(open_window("b_x", static_cast<double>(b_x), 0.0, 1.0));
  r.push_back(open_window("b_y", static_cast<double>(b_y), 0.0, 1.0));
  const auto sd = static_cast<double>(std::sqrt(delta));
  if (sd > 0) {
    r.push_back(open_window("alpha_x*sqrt(delta)/b_x", sd * static_cast<double>(step.alpha_x / b_x), 0.0, 1.0));
    r.push_back(open_window("alpha_y*sqrt(delta)/b_y", sd * static_cast<double>(step.alpha_y / b_y), 0.0, 1.0));
  }
  for (auto& c : step_windows(step, delta, spec)) r.push_back(std::move(c));
  const Scalar Ms[] = {M_x, M_y};
  const Scalar bs[] = {b_x, b_y};
  const char* names[] = {"x", "y"};
  for (int k = 0; k < 2; ++k) {
    const double M = static_cast<double>(Ms[k]);
    r.push_back(WindowCheck{std::string("M_") + names[k], M, 0.0, 1.0, false, true, M > 0.0 && M <= 1.0});
    r.push_back(open_window(std::string("(1-b_") + names[k] + ")/M_" + names[k], (1.0 - static_cast<double>(bs[k])) / M,
                            0.0, 1.0));
  }
}

// max{(1-b_x)/M_x, (1-b_y)/M_y, 1 - gamma lambda_second / 2, 1 - alpha} over both blocks.
template <typename Scalar>
Scalar contraction_factor(Scalar b_x, Scalar b_y, Scalar M_x, Scalar M_y, const StepParams<Scalar>& step,
                          const SpectralInfo<Scalar>& spec) {
  Scalar r = std::max((1 - b_x) / M_x, (1 - b_y) / M_y);
  if (!spec.trivial()) {
    r = std::max(r, 1 - step.gamma_x * spec.lambda_second_smallest / 2);
    r = std::max(r, 1 - step.gamma_y * spec.lambda_second_smallest / 2);
  }
  return std::max({r, 1 - step.alpha_x, 1 - step.alpha_y});
}

}  // namespace detail

/// Parameters of restart stage k.
template <typename Scalar>
struct StageParams {
  int k = 0;
  Scalar delta = 0;
  Scalar s = 0;
  Scalar b_x = 0;
  Scalar b_y = 0;
  Scalar gamma_x = 0;
  Scalar gamma_y = 0;
  Scalar alpha_x = 0;
  Scalar alpha_y = 0;
  Scalar M_x = 1;
  Scalar M_y = 1;
  Scalar M = 1;
  Scalar rho = 0;    // global restart rate
  Scalar rho_k = 0;  // per-step contraction of the stage Lyapunov function
  std::int64_t t = 1;

  [[nodiscard]] StepParams<Scalar> step() const { return {s, gamma_x, gamma_y, alpha_x, alpha_y}; }
  [[nodiscard]] LyapunovWeights<Scalar> weights() const { return {M_x, M_y, delta}; }
};

/// Stage-k schedule without the positivity guard, for reporting. When b_x
/// or b_y is not positive the remaining entries are still filled in and t
/// is 0 if the iteration-count formula is undefined.
template <typename Scalar>
StageParams<Scalar> crdpsg_stage_schedule(int k, const SaddleConstants<Scalar>& c, Scalar delta,
                                          const SpectralInfo<Scalar>& spec) {
  const Scalar kappa = c.kappa_f();
  const Scalar L = c.L();
  const Scalar shrink = std::pow(Scalar(2), Scalar(k) / 2);
  const Scalar sd = std::sqrt(delta);

  StageParams<Scalar> p;
  p.k = k;
  p.delta = delta;
  p.s = Scalar(1) / (4 * L * kappa * shrink);
  p.b_x = c.mu_x * p.s - 4 * p.s * p.s * c.L_yx * c.L_yx;
  p.b_y = c.mu_y * p.s - 4 * p.s * p.s * c.L_xy * c.L_xy;
  if (!spec.trivial()) {
    const Scalar denom = 2 * (1 + delta) * (1 + delta) * spec.lambda_max;
    p.gamma_x = p.b_x / denom;
    p.gamma_y = p.b_y / denom;
  }
  p.alpha_x = p.b_x / (1 + delta);
  p.alpha_y = p.b_y / (1 + delta);
  p.M_x = detail::lyapunov_m(delta, p.alpha_x, p.gamma_x, spec);
  p.M_y = detail::lyapunov_m(delta, p.alpha_y, p.gamma_y, spec);
  p.M = std::min(p.M_x, p.M_y);

  const Scalar gap = 1 - 1 / std::sqrt(Scalar(2));
  const Scalar k2 = kappa * kappa;
  p.rho = std::min({gap / (8 * k2), gap / (16 * (1 + delta) * (1 + delta) * k2 * spec.kappa_g),
                    gap / (4 * (1 + delta) * k2)});
  const Scalar logs = std::max({std::log((3 * p.M_x + 6 * sd) / p.M), std::log((3 * p.M_y + 6 * sd) / p.M),
                                std::log(3 / p.M)});
  const Scalar count = std::ceil(logs / -std::log1p(-p.rho / shrink));
  p.t = std::isfinite(static_cast<double>(count)) && p.M > 0 ? std::max<std::int64_t>(1, static_cast<std::int64_t>(count)) : 0;
  p.rho_k = detail::contraction_factor(p.b_x, p.b_y, p.M_x, p.M_y, p.step(), spec);
  return p;
}

/// Stage-k schedule. Raises InfeasibleParameters when b_x or b_y is not
/// positive, which happens at k = 0 when kappa_f = 1 and L_yx = L (or L_xy = L).
template <typename Scalar>
StageParams<Scalar> crdpsg_stage_params(int k, const SaddleConstants<Scalar>& c, Scalar delta,
                                        const SpectralInfo<Scalar>& spec) {
  c.validate();
  if (!(delta >= Scalar(0) && delta <= Scalar(1))) throw InfeasibleParameters("delta must lie in [0, 1]");
  auto p = crdpsg_stage_schedule(k, c, delta, spec);
  if (!(p.b_x > 0) || !(p.b_y > 0)) {
    throw InfeasibleParameters("stage " + std::to_string(k) + ": b_x=" + std::to_string(static_cast<double>(p.b_x)) +
                               ", b_y=" + std::to_string(static_cast<double>(p.b_y)) +
                               " must be positive; needs kappa_f > 1 or a smaller initial step");
  }
  return p;
}

template <typename Scalar>
FeasibilityReport stage_windows(const StageParams<Scalar>& p, const SpectralInfo<Scalar>& spec) {
  FeasibilityReport r;
  detail::push_common_windows(r, p.b_x, p.b_y, p.M_x, p.M_y, p.delta, p.step(), spec);
  r.push_back(WindowCheck{"t_k", static_cast<double>(p.t), 1.0, std::numeric_limits<double>::infinity(), true, false,
                          p.t >= 1});
  return r;
}

template <typename Scalar>
struct SvrgParams {
  Scalar delta = 0;
  Scalar s = 0;
  Scalar c_tilde_x = 0;
  Scalar c_tilde_y = 0;
  Scalar b_x = 0;
  Scalar b_y = 0;
  Scalar alpha_x = 0;
  Scalar alpha_y = 0;
  Scalar gamma_x = 0;
  Scalar gamma_y = 0;
  Scalar M_x = 1;
  Scalar M_y = 1;
  Scalar p = 1;
  Scalar p_min = 1;
  Scalar rho = 0;
  Scalar b_lower = 0;  // n p_min / (144 kappa_f^2)

  [[nodiscard]] StepParams<Scalar> step() const { return {s, gamma_x, gamma_y, alpha_x, alpha_y}; }
  [[nodiscard]] LyapunovWeights<Scalar> weights() const { return {M_x, M_y, delta}; }
};

/// Variance-reduced schedule without the positivity guard, for reporting.
template <typename Scalar>
SvrgParams<Scalar> cdpsvrg_schedule(const SaddleConstants<Scalar>& c, Scalar delta, const SpectralInfo<Scalar>& spec,
                                    Index n, Scalar p_min, Scalar p) {
  const Scalar L = c.L();
  const Scalar nn = Scalar(n);
  const Scalar sd = std::sqrt(delta);

  SvrgParams<Scalar> q;
  q.delta = delta;
  q.p = p;
  q.p_min = p_min;
  q.s = c.mu() * nn * p_min / (24 * L * L);
  const Scalar s2 = q.s * q.s;
  q.c_tilde_x = 8 * s2 * (c.L_xx * c.L_xx + c.L_yx * c.L_yx) / (nn * p_min * p);
  q.c_tilde_y = 8 * s2 * (c.L_yy * c.L_yy + c.L_xy * c.L_xy) / (nn * p_min * p);
  q.b_x = q.s * c.mu_x - 4 * s2 * c.L_yx * c.L_yx / (nn * p_min) - q.c_tilde_x * p;
  q.b_y = q.s * c.mu_y - 4 * s2 * c.L_xy * c.L_xy / (nn * p_min) - q.c_tilde_y * p;
  q.b_lower = nn * p_min / (144 * c.kappa_f() * c.kappa_f());
  q.alpha_x = q.b_x / (1 + delta);
  q.alpha_y = q.b_y / (1 + delta);
  if (!spec.trivial()) {
    const Scalar cap = 1 / (4 * (1 + delta) * spec.lambda_max);
    if (delta > 0) {
      q.gamma_x = std::min(q.b_x / (4 * sd * (1 + delta) * spec.lambda_max), cap);
      q.gamma_y = std::min(q.b_y / (4 * sd * (1 + delta) * spec.lambda_max), cap);
    } else {
      q.gamma_x = cap;
      q.gamma_y = cap;
    }
  }
  q.M_x = detail::lyapunov_m(delta, q.alpha_x, q.gamma_x, spec);
  q.M_y = detail::lyapunov_m(delta, q.alpha_y, q.gamma_y, spec);
  q.rho = std::max(detail::contraction_factor(q.b_x, q.b_y, q.M_x, q.M_y, q.step(), spec), 1 - p / 2);
  return q;
}

template <typename Scalar>
SvrgParams<Scalar> cdpsvrg_params(const SaddleConstants<Scalar>& c, Scalar delta, const SpectralInfo<Scalar>& spec,
                                  Index n, Scalar p_min, Scalar p) {
  c.validate();
  if (!(delta >= Scalar(0) && delta <= Scalar(1))) throw InfeasibleParameters("delta must lie in [0, 1]");
  if (!(p > Scalar(0) && p <= Scalar(1))) throw InfeasibleParameters("reference probability p must lie in (0, 1]");
  if (n < 1 || !(p_min > Scalar(0)) || p_min * Scalar(n) > Scalar(1) + Scalar(1e-12)) {
    throw InfeasibleParameters("p_min must lie in (0, 1/n]");
  }
  auto q = cdpsvrg_schedule(c, delta, spec, n, p_min, p);
  if (!(q.b_x > 0) || !(q.b_y > 0)) throw InfeasibleParameters("b_x and b_y must be positive");
  return q;
}

template <typename Scalar>
FeasibilityReport svrg_windows(const SvrgParams<Scalar>& q, const SpectralInfo<Scalar>& spec) {
  FeasibilityReport r;
  detail::push_common_windows(r, q.b_x, q.b_y, q.M_x, q.M_y, q.delta, q.step(), spec);
  const double inf = std::numeric_limits<double>::infinity();
  const double lo = static_cast<double>(q.b_lower);
  r.push_back(WindowCheck{"b_x lower bound", static_cast<double>(q.b_x), lo, inf, true, false, q.b_x >= q.b_lower});
  r.push_back(WindowCheck{"b_y lower bound", static_cast<double>(q.b_y), lo, inf, true, false, q.b_y >= q.b_lower});
  return r;
}

template <typename Scalar>
struct TraceRow {
  std::uint64_t iter = 0;
  CostCounters cost;
  Scalar dist_sq = 0;
  std::optional<Scalar> phi;
};

template <typename Scalar>
struct Trace {
  std::vector<TraceRow<Scalar>> rows;
  NodeEnsemble<Scalar> final_state;
  CostCounters cost;
  std::vector<StageParams<Scalar>> stages;
  std::optional<SvrgParams<Scalar>> svrg;
};

/// Seen by observers after every step (and once after each restart reset,
/// with `restart` set).
template <typename Scalar>
struct StepEvent {
  std::uint64_t iter = 0;
  int stage = 0;
  bool restart = false;
  const NodeEnsemble<Scalar>* ens = nullptr;
  const CostCounters* cost = nullptr;
  const StepParams<Scalar>* step = nullptr;
  const SvrgState<Scalar>* svrg = nullptr;
};

template <typename Scalar>
using Observer = std::function<void(const StepEvent<Scalar>&)>;

template <typename Scalar>
struct RunOptions {
  std::uint64_t seed = 0;
  std::int64_t stride = 0;                     // 0: every step up to 1e4 steps, else every 10
  std::optional<PrimalDualPoint<Scalar>> z_star;  // enables dist_sq and phi columns
  bool log_phi = false;
  std::optional<SaddleConstants<Scalar>> constants;  // replaces the problem's own bounds
  Observer<Scalar> observer;
};

namespace detail {

inline std::int64_t resolve_stride(std::int64_t stride, std::int64_t total) {
  if (stride > 0) return stride;
  return total <= 10000 ? 1 : 10;
}

template <typename Scalar>
void require_finite(const NodeEnsemble<Scalar>& ens, std::uint64_t iter) {
  if (!ens.x.allFinite() || !ens.y.allFinite() || !ens.Dx.allFinite() || !ens.Dy.allFinite()) {
    throw NumericalFailure("non-finite iterate at iteration " + std::to_string(iter));
  }
}

template <typename Scalar>
void log_row(Trace<Scalar>& trace, std::uint64_t iter, const CostCounters& cost, const NodeEnsemble<Scalar>& ens,
             const RunOptions<Scalar>& opt, const std::function<Scalar()>& phi_value) {
  TraceRow<Scalar> row;
  row.iter = iter;
  row.cost = cost;
  if (opt.z_star) row.dist_sq = distance_to_saddle(ens, *opt.z_star);
  if (opt.z_star && opt.log_phi) row.phi = phi_value();
  if (!std::isfinite(static_cast<double>(row.dist_sq)) || (row.phi && !std::isfinite(static_cast<double>(*row.phi)))) {
    throw NumericalFailure("non-finite metric at iteration " + std::to_string(iter));
  }
  trace.rows.push_back(row);
}

template <typename Scalar>
void notify(const RunOptions<Scalar>& opt, std::uint64_t iter, int stage, bool restart, const NodeEnsemble<Scalar>& ens,
            const CostCounters& cost, const StepParams<Scalar>& step, const SvrgState<Scalar>* svrg) {
  if (opt.observer) opt.observer(StepEvent<Scalar>{iter, stage, restart, &ens, &cost, &step, svrg});
}

}  // namespace detail

/// Restarted compressed method with minibatch gradients.
///
/// Every stage recomputes its schedule, resets D = 0 and H = current iterate
/// (one uncompressed broadcast, counted as one round), then runs t_k steps.
/// `t_override` replaces every t_k when set.
template <SaddleProblem P>
Trace<typename P::Scalar> run_crdpsg(const P& problem, const DecGraph<typename P::Scalar>& g,
                                     const SpectralInfo<typename P::Scalar>& spec,
                                     const Compressor<typename P::Scalar>& c,
                                     const PrimalDualPoint<typename P::Scalar>& z0, int stages,
                                     const RunOptions<typename P::Scalar>& opt,
                                     std::optional<std::int64_t> t_override = std::nullopt) {
  using Scalar = typename P::Scalar;
  if (stages < 1) throw std::invalid_argument("need at least one stage");
  const auto consts = opt.constants ? *opt.constants : problem.lipschitz_constants();
  const Index m = g.nodes();
  const SeedTree run(opt.seed);
  const Gsgo<P> oracle(problem);

  Trace<Scalar> trace;
  for (int k = 0; k < stages; ++k) {
    auto sp = crdpsg_stage_params(k, consts, c.delta(), spec);
    require_feasible(stage_windows(sp, spec), "stage " + std::to_string(k));
    if (t_override) {
      if (*t_override < 0) throw std::invalid_argument("stage length override must be non-negative");
      sp.t = *t_override;
    }
    trace.stages.push_back(sp);
  }
  std::int64_t total = 0;
  for (const auto& sp : trace.stages) total += sp.t;
  const std::int64_t stride = detail::resolve_stride(opt.stride, total);

  auto ens = replicate(g, z0);
  CostCounters cost;
  std::uint64_t iter = 0;
  for (int k = 0; k < stages; ++k) {
    const auto& sp = trace.stages[static_cast<std::size_t>(k)];
    const auto step = sp.step();
    ens = NodeEnsemble<Scalar>::start(g, std::move(ens.x), std::move(ens.y));
    cost.comm_rounds += 1;
    cost.bits += Compressor<Scalar>::identity().payload_bits(static_cast<std::uint64_t>(m * (problem.dim_x() + problem.dim_y())));

    std::optional<SaddleAnchors<Scalar>> anchors;
    if (opt.z_star && opt.log_phi) anchors = saddle_anchors(problem, *opt.z_star, sp.s);
    auto phi_value = [&] { return phi(ens, *anchors, step, sp.weights(), spec); };
    if (k == 0) detail::log_row<Scalar>(trace, iter, cost, ens, opt, phi_value);
    detail::notify(opt, iter, k, true, ens, cost, step, static_cast<const SvrgState<Scalar>*>(nullptr));

    for (std::int64_t t = 0; t < sp.t; ++t) {
      charge(cost, ipdhg_step(ens, step, g, oracle, problem, c, run.child(iter)));
      ++iter;
      detail::require_finite(ens, iter);
      const bool last = k == stages - 1 && t == sp.t - 1;
      if (last || iter % static_cast<std::uint64_t>(stride) == 0) detail::log_row<Scalar>(trace, iter, cost, ens, opt, phi_value);
      detail::notify(opt, iter, k, false, ens, cost, step, static_cast<const SvrgState<Scalar>*>(nullptr));
    }
  }
  trace.final_state = std::move(ens);
  trace.cost = cost;
  return trace;
}

/// Compressed variance-reduced method. The reference points follow the
/// pre-step iterate with one shared Bernoulli(p) draw per iteration.
template <SaddleProblem P>
Trace<typename P::Scalar> run_cdpsvrg(const P& problem, const DecGraph<typename P::Scalar>& g,
                                      const SpectralInfo<typename P::Scalar>& spec,
                                      const Compressor<typename P::Scalar>& c,
                                      const PrimalDualPoint<typename P::Scalar>& z0, std::int64_t iterations,
                                      typename P::Scalar p, const RunOptions<typename P::Scalar>& opt,
                                      std::vector<std::vector<typename P::Scalar>> dist = {}) {
  using Scalar = typename P::Scalar;
  if (iterations < 0) throw std::invalid_argument("iteration budget must be non-negative");
  if (dist.empty()) dist = uniform_distribution<Scalar>(problem.nodes(), problem.batches());
  const SeedTree run(opt.seed);

  auto ens = replicate(g, z0);
  CostCounters cost;
  auto st = make_svrg_state(problem, ens.x, ens.y, p, std::move(dist), cost);
  const auto consts = opt.constants ? *opt.constants : problem.lipschitz_constants();
  const auto params = cdpsvrg_params(consts, c.delta(), spec, problem.batches(), st.p_min, p);
  require_feasible(svrg_windows(params, spec), "C-DPSVRG");
  const auto step = params.step();
  const Svrgo<P> oracle(problem, st);

  Trace<Scalar> trace;
  trace.svrg = params;
  const std::int64_t stride = detail::resolve_stride(opt.stride, iterations);
  std::optional<SaddleAnchors<Scalar>> anchors;
  if (opt.z_star && opt.log_phi) anchors = saddle_anchors(problem, *opt.z_star, params.s);
  auto phi_value = [&] {
    return phi_tilde(ens, *anchors, st, step, params.weights(), params.c_tilde_x, params.c_tilde_y, spec);
  };
  detail::log_row<Scalar>(trace, 0, cost, ens, opt, phi_value);
  detail::notify(opt, 0, 0, true, ens, cost, step, &st);

  for (std::int64_t t = 0; t < iterations; ++t) {
    const SeedTree tree = run.child(static_cast<std::uint64_t>(t));
    const Stack<Scalar> x_prev = ens.x;
    const Stack<Scalar> y_prev = ens.y;
    charge(cost, ipdhg_step(ens, step, g, oracle, problem, c, tree));
    Engine coin = branch(tree, Stream::kReference).engine();
    svrgo_update_reference(problem, st, x_prev, y_prev, coin, cost);
    const auto iter = static_cast<std::uint64_t>(t + 1);
    detail::require_finite(ens, iter);
    if (t + 1 == iterations || iter % static_cast<std::uint64_t>(stride) == 0) {
      detail::log_row<Scalar>(trace, iter, cost, ens, opt, phi_value);
    }
    detail::notify(opt, iter, 0, false, ens, cost, step, &st);
  }
  trace.final_state = std::move(ens);
  trace.cost = cost;
  return trace;
}

template <typename Scalar>
struct ReferenceOptions {
  std::int64_t max_iterations = 50000;
  Scalar tolerance = Scalar(1e-14);
  Scalar residual_step = 1;  // step used when measuring saddle_residual
  std::int64_t check_every = 10;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct ReferenceResult {
  PrimalDualPoint<Scalar> z;
  Scalar residual = 0;
  std::int64_t iterations = 0;
  bool converged = false;
};

/// Saddle point of a single-node problem via uncompressed variance-reduced
/// iterations with p = 1/n, stopping once saddle_residual drops to the
/// tolerance or the budget runs out. The saddle point of a partitioned
/// problem equals that of its single-node version on the same samples.
template <SaddleProblem P>
ReferenceResult<typename P::Scalar> compute_reference(const P& single_node_problem,
                                                      const ReferenceOptions<typename P::Scalar>& opt,
                                                      std::optional<PrimalDualPoint<typename P::Scalar>> z0 = std::nullopt) {
  using Scalar = typename P::Scalar;
  const P& problem = single_node_problem;
  if (problem.nodes() != 1) throw std::invalid_argument("compute_reference needs a single-node problem");
  const auto g = single_node<Scalar>();
  const auto spec = spectral(g);
  const auto c = Compressor<Scalar>::identity();
  const Scalar p = Scalar(1) / Scalar(problem.batches());
  if (!z0) z0 = PrimalDualPoint<Scalar>{Vector<Scalar>::Zero(problem.dim_x()), Vector<Scalar>::Zero(problem.dim_y())};

  auto ens = replicate(g, *z0);
  CostCounters cost;
  auto st = make_svrg_state(problem, ens.x, ens.y, p, uniform_distribution<Scalar>(1, problem.batches()), cost);
  const auto params = cdpsvrg_params(problem.lipschitz_constants(), Scalar(0), spec, problem.batches(), st.p_min, p);
  require_feasible(svrg_windows(params, spec), "reference");
  const Svrgo<P> oracle(problem, st);
  const SeedTree run = branch(SeedTree(opt.seed), Stream::kReference);

  ReferenceResult<Scalar> out;
  auto residual = [&] {
    return saddle_residual(problem, PrimalDualPoint<Scalar>{ens.x.col(0), ens.y.col(0)}, opt.residual_step);
  };
  out.residual = residual();
  std::int64_t t = 0;
  while (out.residual > opt.tolerance && t < opt.max_iterations) {
    const SeedTree tree = run.child(static_cast<std::uint64_t>(t));
    const Stack<Scalar> x_prev = ens.x;
    const Stack<Scalar> y_prev = ens.y;
    ipdhg_step(ens, params.step(), g, oracle, problem, c, tree);
    Engine coin = branch(tree, Stream::kReference).engine();
    svrgo_update_reference(problem, st, x_prev, y_prev, coin, cost);
    ++t;
    detail::require_finite(ens, static_cast<std::uint64_t>(t));
    if (t % opt.check_every == 0 || t == opt.max_iterations) out.residual = residual();
  }
  out.z = PrimalDualPoint<Scalar>{ens.x.col(0), ens.y.col(0)};
  out.iterations = t;
  out.converged = out.residual <= opt.tolerance;
  return out;
}

}  // namespace decsaddle
