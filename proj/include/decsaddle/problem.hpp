#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "decsaddle/core.hpp"
#include "decsaddle/data.hpp"

namespace decsaddle {

template <typename Scalar>
struct SaddleConstants {
  Scalar mu_x = 0;
  Scalar mu_y = 0;
  Scalar L_xx = 0;
  Scalar L_yy = 0;
  Scalar L_xy = 0;
  Scalar L_yx = 0;

  [[nodiscard]] Scalar L() const { return std::max({L_xx, L_yy, L_xy, L_yx}); }
  [[nodiscard]] Scalar mu() const { return std::min(mu_x, mu_y); }
  [[nodiscard]] Scalar kappa_f() const { return L() / mu(); }

  /// Throws InfeasibleParameters unless every constant is positive and
  /// kappa_f >= 1.
  void validate() const {
    const Scalar all[] = {mu_x, mu_y, L_xx, L_yy, L_xy, L_yx};
    for (Scalar v : all) {
      if (!(v > Scalar(0)) || !std::isfinite(static_cast<double>(v))) {
        throw InfeasibleParameters("saddle constants must be positive and finite");
      }
    }
    if (kappa_f() < Scalar(1)) throw InfeasibleParameters("kappa_f = L/mu must be at least 1");
  }
};

template <typename Scalar>
struct PrimalDualPoint {
  Vector<Scalar> x;
  Vector<Scalar> y;
};

template <typename Scalar>
struct Gradient {
  Vector<Scalar> gx;
  Vector<Scalar> gy;
};

template <typename Scalar>
struct RobustLRParams {
  Scalar lambda = 10;
  Scalar beta = 10;
  Scalar R_x = 100;
  Scalar R_y = 1;
};

/// Euclidean projection onto the l2 ball of radius r.
template <typename Scalar, typename Derived>
Vector<Scalar> project_ball(const Eigen::MatrixBase<Derived>& v, Scalar r) {
  const Scalar norm = v.norm();
  if (norm <= r) return v;
  return v * (r / norm);
}

/// 1/(1+exp(t)) without overflow.
template <typename Scalar>
Scalar logistic_tail(Scalar t) {
  if (t > Scalar(0)) {
    const Scalar e = std::exp(-t);
    return e / (Scalar(1) + e);
  }
  return Scalar(1) / (Scalar(1) + std::exp(t));
}

/// log(1+exp(t)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar t) {
  if (t > Scalar(0)) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

/// One minibatch: rows of `a` are samples, `b` holds their +-1 labels.
template <typename Scalar>
struct Batch {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> a;
  Vector<Scalar> b;

  [[nodiscard]] Index size() const { return b.size(); }
};

/// Robust logistic regression split over m nodes with n batches each:
///
///   f_ij(x, y) = (n/N) sum_l log(1 + exp(-b_l x.(a_l + y)))
///                + lambda/(2m) |x|^2 - beta/(2m) |y|^2,
///
/// with x and y constrained to l2 balls of radii R_x and R_y. f_i is the
/// mean of f_ij over j.
template <typename ScalarT>
class RobustLRProblem {
 public:
  using Scalar = ScalarT;
  using Point = PrimalDualPoint<Scalar>;

  RobustLRProblem(std::vector<std::vector<Batch<Scalar>>> batches, Index dim, Index total_samples,
                  RobustLRParams<Scalar> params)
      : batches_(std::move(batches)), dim_(dim), total_(total_samples), params_(params) {
    if (batches_.empty() || batches_.front().empty()) throw std::invalid_argument("problem needs m >= 1 and n >= 1");
    if (!(params_.R_x > 0 && params_.R_y > 0)) throw std::invalid_argument("ball radii must be positive");
    if (!(params_.lambda >= 0 && params_.beta >= 0)) throw std::invalid_argument("regularization weights must be >= 0");
    const auto n = batches_.front().size();
    Index counted = 0;
    for (const auto& node : batches_) {
      if (node.size() != n) throw std::invalid_argument("every node needs the same number of batches");
      for (const auto& batch : node) {
        if (batch.size() == 0) throw std::invalid_argument("empty batch");
        if (batch.a.cols() != dim_ || batch.a.rows() != batch.size()) {
          throw std::invalid_argument("batch shape does not match problem dimension");
        }
        counted += batch.size();
      }
    }
    if (counted != total_) throw std::invalid_argument("batches do not cover the declared sample count");
  }

  [[nodiscard]] Index nodes() const { return static_cast<Index>(batches_.size()); }
  [[nodiscard]] Index batches() const { return static_cast<Index>(batches_.front().size()); }
  [[nodiscard]] Index dim_x() const { return dim_; }
  [[nodiscard]] Index dim_y() const { return dim_; }
  [[nodiscard]] Index total_samples() const { return total_; }
  [[nodiscard]] const RobustLRParams<Scalar>& params() const { return params_; }
  [[nodiscard]] const Batch<Scalar>& batch(Index i, Index j) const {
    check_index(i, j);
    return batches_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  template <typename DX, typename DY>
  [[nodiscard]] Scalar value_batch(Index i, Index j, const Eigen::MatrixBase<DX>& x,
                                   const Eigen::MatrixBase<DY>& y) const {
    const auto& bt = batch(i, j);
    const Vector<Scalar> t = bt.a * x + Vector<Scalar>::Constant(bt.size(), x.dot(y));
    Scalar loss = 0;
    for (Index l = 0; l < bt.size(); ++l) loss += softplus(-bt.b(l) * t(l));
    const Scalar m = Scalar(nodes());
    return scale() * loss + params_.lambda / (2 * m) * x.squaredNorm() - params_.beta / (2 * m) * y.squaredNorm();
  }

  template <typename DX, typename DY>
  [[nodiscard]] Scalar value_node(Index i, const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) const {
    Scalar acc = 0;
    for (Index j = 0; j < batches(); ++j) acc += value_batch(i, j, x, y);
    return acc / Scalar(batches());
  }

  template <typename DX, typename DY>
  [[nodiscard]] Gradient<Scalar> grad_batch(Index i, Index j, const Eigen::MatrixBase<DX>& x,
                                            const Eigen::MatrixBase<DY>& y) const {
    const auto& bt = batch(i, j);
    const Vector<Scalar> t = bt.a * x + Vector<Scalar>::Constant(bt.size(), x.dot(y));
    Vector<Scalar> w(bt.size());
    for (Index l = 0; l < bt.size(); ++l) w(l) = -bt.b(l) * logistic_tail(bt.b(l) * t(l));
    const Scalar wsum = w.sum();
    const Scalar m = Scalar(nodes());
    Gradient<Scalar> g;
    g.gx = scale() * (bt.a.transpose() * w + wsum * y) + (params_.lambda / m) * x;
    g.gy = scale() * wsum * x - (params_.beta / m) * y;
    return g;
  }

  /// Mean of the batch gradients of node i; costs n gradient units.
  template <typename DX, typename DY>
  [[nodiscard]] Gradient<Scalar> grad_full(Index i, const Eigen::MatrixBase<DX>& x,
                                           const Eigen::MatrixBase<DY>& y) const {
    Gradient<Scalar> acc{Vector<Scalar>::Zero(dim_x()), Vector<Scalar>::Zero(dim_y())};
    for (Index j = 0; j < batches(); ++j) {
      auto g = grad_batch(i, j, x, y);
      acc.gx += g.gx;
      acc.gy += g.gy;
    }
    acc.gx /= Scalar(batches());
    acc.gy /= Scalar(batches());
    return acc;
  }

  template <typename Derived>
  [[nodiscard]] Vector<Scalar> prox_primal(const Eigen::MatrixBase<Derived>& x, Scalar s) const {
    require_step(s);
    return project_ball<Scalar>(x, params_.R_x);
  }

  template <typename Derived>
  [[nodiscard]] Vector<Scalar> prox_dual(const Eigen::MatrixBase<Derived>& y, Scalar s) const {
    require_step(s);
    return project_ball<Scalar>(y, params_.R_y);
  }

  /// Per-batch smoothness bounds, maximised over batches. The moduli are
  /// those of f_i, whose quadratic terms carry lambda/m and beta/m.
  [[nodiscard]] SaddleConstants<Scalar> lipschitz_constants() const {
    const Scalar m = Scalar(nodes());
    const Scalar rx = params_.R_x;
    const Scalar ry = params_.R_y;
    SaddleConstants<Scalar> c;
    c.mu_x = params_.lambda / m;
    c.mu_y = params_.beta / m;
    for (Index i = 0; i < nodes(); ++i) {
      for (Index j = 0; j < batches(); ++j) {
        const auto& bt = batch(i, j);
        Scalar sum_sq = 0;
        Scalar sum_norm = 0;
        for (Index l = 0; l < bt.size(); ++l) {
          const Scalar sq = bt.a.row(l).squaredNorm();
          sum_sq += sq;
          sum_norm += std::sqrt(sq);
        }
        const Scalar count = Scalar(bt.size());
        const Scalar lxx = scale() * sum_sq / 2 + scale() * count * ry * ry / 2 + params_.lambda / m;
        const Scalar lyy = scale() * count * rx * rx / 4 + params_.beta / m;
        const Scalar lxy = scale() * ((1 + rx * ry / 4) * count + rx / 4 * sum_norm);
        c.L_xx = std::max(c.L_xx, lxx);
        c.L_yy = std::max(c.L_yy, lyy);
        c.L_xy = std::max(c.L_xy, lxy);
        c.L_yx = std::max(c.L_yx, lxy);
      }
    }
    return c;
  }

  /// beta/m minus the largest y-curvature of a node's logistic term,
  /// (N_i/N) R_x^2/4. The loss is convex in y, so mu_y = beta/m is a valid
  /// concavity modulus only while this stays positive.
  [[nodiscard]] Scalar concavity_margin() const {
    Index largest = 0;
    for (Index i = 0; i < nodes(); ++i) {
      Index count = 0;
      for (Index j = 0; j < batches(); ++j) count += batch(i, j).size();
      largest = std::max(largest, count);
    }
    const Scalar rx = params_.R_x;
    return params_.beta / Scalar(nodes()) - Scalar(largest) / Scalar(total_) * rx * rx / 4;
  }

 private:
  [[nodiscard]] Scalar scale() const { return Scalar(batches()) / Scalar(total_); }

  void check_index(Index i, Index j) const {
    if (i < 0 || i >= nodes() || j < 0 || j >= batches()) {
      throw std::out_of_range("batch (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
    }
  }

  static void require_step(Scalar s) {
    if (!(s > Scalar(0))) throw std::invalid_argument("prox step must be positive");
  }

  std::vector<std::vector<Batch<Scalar>>> batches_;
  Index dim_;
  Index total_;
  RobustLRParams<Scalar> params_;
};

/// The operations the solvers need from a problem.
template <typename P>
concept SaddleProblem = requires(const P& p, const Vector<typename P::Scalar>& v, typename P::Scalar s, Index i) {
  { p.nodes() } -> std::convertible_to<Index>;
  { p.batches() } -> std::convertible_to<Index>;
  { p.dim_x() } -> std::convertible_to<Index>;
  { p.dim_y() } -> std::convertible_to<Index>;
  { p.grad_batch(i, i, v, v) } -> std::same_as<Gradient<typename P::Scalar>>;
  { p.grad_full(i, v, v) } -> std::same_as<Gradient<typename P::Scalar>>;
  { p.prox_primal(v, s) } -> std::same_as<Vector<typename P::Scalar>>;
  { p.prox_dual(v, s) } -> std::same_as<Vector<typename P::Scalar>>;
  { p.lipschitz_constants() } -> std::same_as<SaddleConstants<typename P::Scalar>>;
};

/// Builds the per-(node, batch) sparse blocks from a dataset and a partition.
template <typename Scalar = double>
RobustLRProblem<Scalar> make_robust_lr(const Dataset& ds, const Partition& part, RobustLRParams<Scalar> params) {
  std::vector<std::vector<Batch<Scalar>>> batches(static_cast<std::size_t>(part.nodes));
  Index total = 0;
  for (Index i = 0; i < part.nodes; ++i) {
    for (Index j = 0; j < part.batches; ++j) {
      const auto& ids = part.batch(i, j);
      Batch<Scalar> bt;
      bt.a.resize(static_cast<Index>(ids.size()), ds.dim);
      bt.b.resize(static_cast<Index>(ids.size()));
      std::vector<Eigen::Triplet<Scalar>> entries;
      for (std::size_t r = 0; r < ids.size(); ++r) {
        const auto& sample = ds.samples[static_cast<std::size_t>(ids[r])];
        bt.b(static_cast<Index>(r)) = Scalar(sample.label);
        for (const auto& [idx, val] : sample.features) entries.emplace_back(static_cast<Index>(r), idx, Scalar(val));
      }
      bt.a.setFromTriplets(entries.begin(), entries.end());
      total += bt.size();
      batches[static_cast<std::size_t>(i)].push_back(std::move(bt));
    }
  }
  return RobustLRProblem<Scalar>(std::move(batches), ds.dim, total, params);
}

/// Sum over nodes of the full local gradients at a common point.
template <SaddleProblem P>
Gradient<typename P::Scalar> grad_sum(const P& p, const Vector<typename P::Scalar>& x,
                                      const Vector<typename P::Scalar>& y) {
  using Scalar = typename P::Scalar;
  Gradient<Scalar> acc{Vector<Scalar>::Zero(p.dim_x()), Vector<Scalar>::Zero(p.dim_y())};
  for (Index i = 0; i < p.nodes(); ++i) {
    auto g = p.grad_full(i, x, y);
    acc.gx += g.gx;
    acc.gy += g.gy;
  }
  return acc;
}

/// Squared distance from z to one projected descent-ascent step; zero exactly
/// at the saddle point.
template <SaddleProblem P>
typename P::Scalar saddle_residual(const P& p, const PrimalDualPoint<typename P::Scalar>& z, typename P::Scalar s) {
  using Scalar = typename P::Scalar;
  const auto g = grad_sum(p, z.x, z.y);
  const Scalar m = Scalar(p.nodes());
  const Vector<Scalar> x_next = p.prox_primal(z.x - (s / m) * g.gx, s);
  const Vector<Scalar> y_next = p.prox_dual(z.y + (s / m) * g.gy, s);
  return (z.x - x_next).squaredNorm() + (z.y - y_next).squaredNorm();
}

}  // namespace decsaddle
