#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "decsaddle/core.hpp"
#include "decsaddle/problem.hpp"
#include "decsaddle/rng.hpp"

namespace decsaddle {

/// Minibatch oracle: one uniformly drawn batch gradient per call.
template <SaddleProblem P>
class Gsgo {
 public:
  using Scalar = typename P::Scalar;
  static constexpr std::uint64_t kUnitsPerCall = 1;

  explicit Gsgo(const P& problem) : problem_(&problem) {}

  Gradient<Scalar> operator()(Index i, const Vector<Scalar>& x, const Vector<Scalar>& y, Engine& rng) const {
    std::uniform_int_distribution<Index> pick(0, problem_->batches() - 1);
    return problem_->grad_batch(i, pick(rng), x, y);
  }

 private:
  const P* problem_;
};

/// Full local gradient; deterministic, costs n units per call.
template <SaddleProblem P>
class ExactOracle {
 public:
  using Scalar = typename P::Scalar;

  explicit ExactOracle(const P& problem) : problem_(&problem), units_(static_cast<std::uint64_t>(problem.batches())) {}

  [[nodiscard]] std::uint64_t units_per_call() const { return units_; }

  Gradient<Scalar> operator()(Index i, const Vector<Scalar>& x, const Vector<Scalar>& y, Engine&) const {
    return problem_->grad_full(i, x, y);
  }

 private:
  const P* problem_;
  std::uint64_t units_;
};

template <typename O>
std::uint64_t units_per_call(const O& oracle) {
  if constexpr (requires { O::kUnitsPerCall; }) {
    return O::kUnitsPerCall;
  } else {
    return oracle.units_per_call();
  }
}

/// Reference points, their cached full gradients and the sampling law.
template <typename Scalar>
struct SvrgState {
  Stack<Scalar> x_tilde;
  Stack<Scalar> y_tilde;
  Stack<Scalar> gx_tilde;
  Stack<Scalar> gy_tilde;
  std::vector<std::vector<Scalar>> P;  // P[i][l] = probability of batch l at node i
  Scalar p = 1;
  Scalar p_min = 1;
  std::uint64_t refreshes = 0;
};

/// Uniform batch sampling at every node.
template <typename Scalar>
std::vector<std::vector<Scalar>> uniform_distribution(Index nodes, Index batches) {
  return std::vector<std::vector<Scalar>>(static_cast<std::size_t>(nodes),
                                          std::vector<Scalar>(static_cast<std::size_t>(batches), Scalar(1) / Scalar(batches)));
}

namespace detail {

template <SaddleProblem P>
void refresh_reference(const P& problem, SvrgState<typename P::Scalar>& st, const Stack<typename P::Scalar>& x,
                       const Stack<typename P::Scalar>& y) {
  st.x_tilde = x;
  st.y_tilde = y;
  for (Index i = 0; i < problem.nodes(); ++i) {
    auto g = problem.grad_full(i, x.col(i).eval(), y.col(i).eval());
    st.gx_tilde.col(i) = g.gx;
    st.gy_tilde.col(i) = g.gy;
  }
}

}  // namespace detail

/// Starts SVRG at (x, y). `cost` is charged m*n units for the initial full
/// gradients.
template <SaddleProblem P>
SvrgState<typename P::Scalar> make_svrg_state(const P& problem, const Stack<typename P::Scalar>& x,
                                              const Stack<typename P::Scalar>& y, typename P::Scalar p,
                                              std::vector<std::vector<typename P::Scalar>> dist, CostCounters& cost) {
  using Scalar = typename P::Scalar;
  if (!(p > Scalar(0) && p <= Scalar(1))) {
    throw InfeasibleParameters("reference probability p=" + std::to_string(static_cast<double>(p)) + " is outside (0, 1]");
  }
  if (static_cast<Index>(dist.size()) != problem.nodes()) throw std::invalid_argument("one sampling law per node required");
  Scalar p_min = 1;
  for (const auto& row : dist) {
    if (static_cast<Index>(row.size()) != problem.batches()) throw std::invalid_argument("sampling law has wrong length");
    Scalar total = 0;
    for (Scalar q : row) {
      if (!(q > Scalar(0))) throw std::invalid_argument("batch probabilities must be positive");
      total += q;
      p_min = std::min(p_min, q);
    }
    if (std::abs(total - Scalar(1)) > Scalar(1e-12)) throw std::invalid_argument("batch probabilities must sum to 1");
  }

  SvrgState<Scalar> st;
  st.gx_tilde.resize(problem.dim_x(), problem.nodes());
  st.gy_tilde.resize(problem.dim_y(), problem.nodes());
  st.P = std::move(dist);
  st.p = p;
  st.p_min = p_min;
  detail::refresh_reference(problem, st, x, y);
  cost.grad_units += static_cast<std::uint64_t>(problem.nodes() * problem.batches());
  return st;
}

/// Variance-reduced oracle anchored at the reference points of `state`.
template <SaddleProblem P>
class Svrgo {
 public:
  using Scalar = typename P::Scalar;
  static constexpr std::uint64_t kUnitsPerCall = 2;

  Svrgo(const P& problem, const SvrgState<Scalar>& state) : problem_(&problem), state_(&state) {}

  Gradient<Scalar> operator()(Index i, const Vector<Scalar>& x, const Vector<Scalar>& y, Engine& rng) const {
    const auto& law = state_->P[static_cast<std::size_t>(i)];
    std::discrete_distribution<Index> pick(law.begin(), law.end());
    const Index l = pick(rng);
    return estimate(i, l, x, y);
  }

  /// The estimator for a fixed batch l.
  [[nodiscard]] Gradient<Scalar> estimate(Index i, Index l, const Vector<Scalar>& x, const Vector<Scalar>& y) const {
    const Scalar weight = Scalar(1) / (Scalar(problem_->batches()) * state_->P[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)]);
    const auto now = problem_->grad_batch(i, l, x, y);
    const auto ref = problem_->grad_batch(i, l, state_->x_tilde.col(i), state_->y_tilde.col(i));
    return Gradient<Scalar>{weight * (now.gx - ref.gx) + state_->gx_tilde.col(i),
                            weight * (now.gy - ref.gy) + state_->gy_tilde.col(i)};
  }

 private:
  const P* problem_;
  const SvrgState<Scalar>* state_;
};

/// One shared Bernoulli(p) draw; on success every node's reference moves to
/// (x, y) and its full gradient is recomputed at m*n units.
template <SaddleProblem P>
bool svrgo_update_reference(const P& problem, SvrgState<typename P::Scalar>& st, const Stack<typename P::Scalar>& x,
                            const Stack<typename P::Scalar>& y, Engine& rng, CostCounters& cost) {
  std::bernoulli_distribution omega(static_cast<double>(st.p));
  if (!omega(rng)) return false;
  detail::refresh_reference(problem, st, x, y);
  cost.grad_units += static_cast<std::uint64_t>(problem.nodes() * problem.batches());
  ++st.refreshes;
  return true;
}

}  // namespace decsaddle
