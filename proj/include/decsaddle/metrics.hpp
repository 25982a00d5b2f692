#pragma once

#include <cmath>

#include "decsaddle/core.hpp"
#include "decsaddle/ipdhg.hpp"
#include "decsaddle/oracles.hpp"
#include "decsaddle/problem.hpp"
#include "decsaddle/topology.hpp"

namespace decsaddle {

/// sum_i |x_i - x*|^2 + |y_i - y*|^2.
template <typename Scalar>
Scalar distance_to_saddle(const Stack<Scalar>& x, const Stack<Scalar>& y, const PrimalDualPoint<Scalar>& z_star) {
  return (x.colwise() - z_star.x).squaredNorm() + (y.colwise() - z_star.y).squaredNorm();
}

template <typename Scalar>
Scalar distance_to_saddle(const NodeEnsemble<Scalar>& ens, const PrimalDualPoint<Scalar>& z_star) {
  return distance_to_saddle(ens.x, ens.y, z_star);
}

/// Fixed-point values of D and H at the saddle point for step size s.
template <typename Scalar>
struct SaddleAnchors {
  PrimalDualPoint<Scalar> z_star;
  Stack<Scalar> D_star_x;
  Stack<Scalar> D_star_y;
  Stack<Scalar> H_star_x;
  Stack<Scalar> H_star_y;
};

template <SaddleProblem P>
SaddleAnchors<typename P::Scalar> saddle_anchors(const P& problem, const PrimalDualPoint<typename P::Scalar>& z_star,
                                                 typename P::Scalar s) {
  using Scalar = typename P::Scalar;
  const Index m = problem.nodes();
  Stack<Scalar> gx(problem.dim_x(), m);
  Stack<Scalar> gy(problem.dim_y(), m);
  for (Index i = 0; i < m; ++i) {
    auto g = problem.grad_full(i, z_star.x, z_star.y);
    gx.col(i) = g.gx;
    gy.col(i) = g.gy;
  }
  const Vector<Scalar> mean_x = gx.rowwise().mean();
  const Vector<Scalar> mean_y = gy.rowwise().mean();

  SaddleAnchors<Scalar> a;
  a.z_star = z_star;
  a.D_star_x = -(gx.colwise() - mean_x);
  a.D_star_y = gy.colwise() - mean_y;
  a.H_star_x = (z_star.x - s * mean_x).replicate(1, m);
  a.H_star_y = (z_star.y + s * mean_y).replicate(1, m);
  return a;
}

/// Coefficients of the Lyapunov function for one parameter set.
template <typename Scalar>
struct LyapunovWeights {
  Scalar M_x = 1;
  Scalar M_y = 1;
  Scalar delta = 0;
};

/// M |x - 1x*|^2 + (2s^2/gamma) |D - D*|^2 in the (I - W)^+ metric
/// + sqrt(delta) |H - H*|^2, for both blocks. The D terms are absent on a
/// single node, where I - W = 0.
template <typename Scalar>
Scalar phi(const NodeEnsemble<Scalar>& ens, const SaddleAnchors<Scalar>& anchors, const StepParams<Scalar>& params,
           const LyapunovWeights<Scalar>& w, const SpectralInfo<Scalar>& spec) {
  const Scalar sd = std::sqrt(w.delta);
  const Scalar s2 = params.s * params.s;
  Scalar total = w.M_x * (ens.x.colwise() - anchors.z_star.x).squaredNorm() +
                 w.M_y * (ens.y.colwise() - anchors.z_star.y).squaredNorm();
  if (!spec.trivial()) {
    total += 2 * s2 / params.gamma_x * pinv_weighted_sqnorm(spec, ens.Dx - anchors.D_star_x);
    total += 2 * s2 / params.gamma_y * pinv_weighted_sqnorm(spec, ens.Dy - anchors.D_star_y);
  }
  if (sd > Scalar(0)) {
    total += sd * (ens.comm_x.H - anchors.H_star_x).squaredNorm();
    total += sd * (ens.comm_y.H - anchors.H_star_y).squaredNorm();
  }
  return total;
}

/// phi plus c_x |x~ - 1x*|^2 + c_y |y~ - 1y*|^2 for the SVRG reference points.
template <typename Scalar>
Scalar phi_tilde(const NodeEnsemble<Scalar>& ens, const SaddleAnchors<Scalar>& anchors, const SvrgState<Scalar>& st,
                 const StepParams<Scalar>& params, const LyapunovWeights<Scalar>& w, Scalar c_tilde_x,
                 Scalar c_tilde_y, const SpectralInfo<Scalar>& spec) {
  return phi(ens, anchors, params, w, spec) +
         c_tilde_x * (st.x_tilde.colwise() - anchors.z_star.x).squaredNorm() +
         c_tilde_y * (st.y_tilde.colwise() - anchors.z_star.y).squaredNorm();
}

}  // namespace decsaddle
