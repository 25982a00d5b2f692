#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "decsaddle/core.hpp"
#include "decsaddle/rng.hpp"
#include "decsaddle/topology.hpp"

namespace decsaddle {

/// Unbiased b-bit infinity-norm quantizer with an explicit dither vector u in [0,1]^d.
template <typename Scalar, typename DerivedX, typename DerivedU>
Vector<Scalar> quantize_inf(const Eigen::MatrixBase<DerivedX>& x, int bits, const Eigen::MatrixBase<DerivedU>& u) {
  const Scalar scale = x.template lpNorm<Eigen::Infinity>();
  Vector<Scalar> out = Vector<Scalar>::Zero(x.size());
  if (scale == Scalar(0)) return out;
  const Scalar levels = std::ldexp(Scalar(1), bits - 1);
  const Scalar step = scale / levels;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar level = std::floor(levels * std::abs(x(i)) / scale + u(i));
    const Scalar sign = x(i) > 0 ? Scalar(1) : (x(i) < 0 ? Scalar(-1) : Scalar(0));
    out(i) = step * sign * level;
  }
  return out;
}

template <typename Scalar, typename Derived>
Vector<Scalar> quantize_inf(const Eigen::MatrixBase<Derived>& x, int bits, Engine& rng) {
  std::uniform_real_distribution<Scalar> uniform(Scalar(0), Scalar(1));
  Vector<Scalar> u(x.size());
  for (Index i = 0; i < u.size(); ++i) u(i) = uniform(rng);
  return quantize_inf<Scalar>(x, bits, u);
}

template <typename Scalar>
class Compressor {
 public:
  enum class Kind { kIdentity, kQuantizeInf };

  static Compressor identity() { return Compressor(Kind::kIdentity, 0, Scalar(0)); }

  /// delta is the variance factor used by the parameter schedules; it must
  /// lie in (0, 1].
  static Compressor quantize(int bits, Scalar delta) {
    if (bits < 1 || bits > 52) throw std::invalid_argument("quantizer bits must be in [1, 52]");
    if (!(delta > Scalar(0)) || delta > Scalar(1)) {
      throw InfeasibleParameters("compression factor delta=" + std::to_string(static_cast<double>(delta)) +
                                 " is outside (0, 1]");
    }
    return Compressor(Kind::kQuantizeInf, bits, delta);
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_identity() const { return kind_ == Kind::kIdentity; }
  [[nodiscard]] int bits() const { return bits_; }
  [[nodiscard]] Scalar delta() const { return delta_; }

  template <typename Derived>
  Vector<Scalar> operator()(const Eigen::MatrixBase<Derived>& x, Engine& rng) const {
    if (is_identity()) return x;
    return quantize_inf<Scalar>(x, bits_, rng);
  }

  /// Bits on the wire for `coords` transmitted coordinates: sign plus b level
  /// bits per coordinate when quantized, 32 otherwise.
  [[nodiscard]] std::uint64_t payload_bits(std::uint64_t coords) const {
    return coords * (is_identity() ? 32u : static_cast<std::uint64_t>(bits_) + 1u);
  }

 private:
  Compressor(Kind kind, int bits, Scalar delta) : kind_(kind), bits_(bits), delta_(delta) {}

  Kind kind_;
  int bits_;
  Scalar delta_;
};

/// Monte-Carlo estimate of E||Q(x) - x||^2 for a unit vector x.
template <typename Scalar>
Scalar relative_compression_error(const Compressor<Scalar>& c, const Vector<Scalar>& x, int trials, Engine& rng) {
  Scalar acc = 0;
  for (int t = 0; t < trials; ++t) acc += (c(x, rng) - x).squaredNorm();
  return acc / (Scalar(trials) * x.squaredNorm());
}

/// Empirical compression factor: the largest Monte-Carlo estimate of
/// E||Q(x) - x||^2 / ||x||^2 over a set of unit directions.
///
/// The directions are Gaussian samples plus one near worst case for Q_inf
/// (one full-scale coordinate, the rest halfway between the two lowest
/// levels).
template <typename Scalar>
Scalar estimate_delta(int bits, Index dim, int trials, Engine& rng, int directions = 32) {
  if (trials < 1000) throw std::invalid_argument("estimate_delta needs at least 1000 trials");
  if (dim < 1) throw std::invalid_argument("estimate_delta needs dim >= 1");
  const auto probe = Compressor<Scalar>::quantize(bits, Scalar(1));

  std::vector<Vector<Scalar>> dirs;
  Vector<Scalar> worst = Vector<Scalar>::Constant(dim, Scalar(0.5) / std::ldexp(Scalar(1), bits - 1));
  worst(0) = 1;
  dirs.push_back(worst.normalized());
  std::normal_distribution<Scalar> normal;
  for (int k = 0; k < directions; ++k) {
    Vector<Scalar> v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = normal(rng);
    if (v.norm() > 0) dirs.push_back(v.normalized());
  }

  Scalar best = 0;
  for (const auto& x : dirs) best = std::max(best, relative_compression_error(probe, x, trials, rng));
  return best;
}

template <typename Scalar>
Scalar estimate_delta(const Compressor<Scalar>& c, Index dim, int trials, Engine& rng) {
  if (c.is_identity()) return Scalar(0);
  return estimate_delta<Scalar>(c.bits(), dim, trials, rng);
}

/// Builds a Q_inf compressor whose delta is estimated at dimension `dim`.
template <typename Scalar>
Compressor<Scalar> quantizer_with_estimated_delta(int bits, Index dim, int trials, Engine& rng) {
  return Compressor<Scalar>::quantize(bits, estimate_delta<Scalar>(bits, dim, trials, rng));
}

/// Per-node reference vectors H and their mixed counterparts Hw = (W x I) H.
template <typename Scalar>
struct CommState {
  Stack<Scalar> H;
  Stack<Scalar> Hw;

  static CommState from_reference(const DecGraph<Scalar>& g, Stack<Scalar> h) {
    Stack<Scalar> hw = mix(g, h);
    return CommState{std::move(h), std::move(hw)};
  }
};

template <typename Scalar>
struct Exchange {
  Stack<Scalar> nu_hat;
  Stack<Scalar> nu_hat_w;
};

/// One compressed exchange of `nu` relative to the references in `state`.
///
/// Each node quantizes nu_i - H_i with its own stream `streams.engine(i)`;
/// only those quantized differences cross the network. `state` is advanced
/// in place with mixing factor alpha.
template <typename Scalar>
Exchange<Scalar> comm_step(const Stack<Scalar>& nu, CommState<Scalar>& state, Scalar alpha,
                           const DecGraph<Scalar>& g, const Compressor<Scalar>& c, const SeedTree& streams) {
  const Scalar alpha_max = Scalar(1) / (Scalar(1) + c.delta());
  if (!(alpha > Scalar(0) && alpha < alpha_max)) {
    throw InfeasibleParameters("COMM mixing factor alpha=" + std::to_string(static_cast<double>(alpha)) +
                               " is outside (0, 1/(1+delta))");
  }
  if (nu.rows() != state.H.rows() || nu.cols() != state.H.cols() || nu.cols() != g.nodes()) {
    throw std::invalid_argument("comm_step: shape mismatch");
  }

  Exchange<Scalar> out;
  if (c.is_identity()) {
    // H + (nu - H) = nu and Hw + W(nu - H) = W nu; taken directly so they hold exactly.
    out = Exchange<Scalar>{nu, mix(g, nu)};
  } else {
    Stack<Scalar> q(nu.rows(), nu.cols());
    for (Index i = 0; i < nu.cols(); ++i) {
      Engine rng = streams.engine(static_cast<std::uint64_t>(i));
      q.col(i) = c(nu.col(i) - state.H.col(i), rng);
    }
    out = Exchange<Scalar>{state.H + q, state.Hw + mix(g, q)};
  }
  state.H = (Scalar(1) - alpha) * state.H + alpha * out.nu_hat;
  state.Hw = (Scalar(1) - alpha) * state.Hw + alpha * out.nu_hat_w;
  return out;
}

}  // namespace decsaddle
