#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "decsaddle/core.hpp"

namespace decsaddle {

/// Symmetric, row-stochastic gossip weights over m nodes.
///
/// Only the factories below create graphs, and each of them checks the
/// invariants: W = W^T exactly, |row sum - 1| <= 1e-12, 0 <= W_ij <= 1 and
/// W_ii > 0.
template <typename Scalar>
class DecGraph {
 public:
  static DecGraph from_weights(Matrix<Scalar> weights) {
    const Index m = weights.rows();
    if (m < 1 || weights.cols() != m) throw TopologyError("weight matrix must be square and non-empty");
    for (Index i = 0; i < m; ++i) {
      Scalar row = 0;
      for (Index j = 0; j < m; ++j) {
        const Scalar w = weights(i, j);
        if (!(w >= Scalar(0) && w <= Scalar(1))) throw TopologyError("weights must lie in [0, 1]");
        if (w != weights(j, i)) throw TopologyError("weight matrix is not symmetric");
        row += w;
      }
      if (std::abs(row - Scalar(1)) > Scalar(1e-12)) throw TopologyError("weight matrix is not row stochastic");
      if (!(weights(i, i) > Scalar(0))) throw TopologyError("every node needs a positive self weight");
    }
    return DecGraph(std::move(weights));
  }

  [[nodiscard]] Index nodes() const { return weights_.rows(); }
  [[nodiscard]] const Matrix<Scalar>& weights() const { return weights_; }
  [[nodiscard]] Matrix<Scalar> laplacian() const {
    return Matrix<Scalar>::Identity(nodes(), nodes()) - weights_;
  }
  [[nodiscard]] bool adjacent(Index i, Index j) const { return i != j && weights_(i, j) > Scalar(0); }

 private:
  explicit DecGraph(Matrix<Scalar> weights) : weights_(std::move(weights)) {}

  Matrix<Scalar> weights_;
};

template <typename Scalar = double>
DecGraph<Scalar> single_node() {
  return DecGraph<Scalar>::from_weights(Matrix<Scalar>::Ones(1, 1));
}

/// Ring with weight 1/3 on the node itself and on both neighbours.
template <typename Scalar = double>
DecGraph<Scalar> build_ring(Index m) {
  if (m < 3) throw TopologyError("ring needs at least 3 nodes, got " + std::to_string(m));
  const Scalar third = Scalar(1) / Scalar(3);
  Matrix<Scalar> w = Matrix<Scalar>::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    w(i, i) = third;
    w(i, (i + 1) % m) = third;
    w(i, (i + m - 1) % m) = third;
  }
  return DecGraph<Scalar>::from_weights(std::move(w));
}

/// 2D torus: node (r, c) = r * cols + c, weight 1/5 on itself and its four
/// wrap-around neighbours.
template <typename Scalar = double>
DecGraph<Scalar> build_torus(Index rows, Index cols) {
  if (rows < 3 || cols < 3) {
    throw TopologyError("torus needs at least 3 rows and 3 columns, got " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  }
  const Index m = rows * cols;
  const Scalar fifth = Scalar(1) / Scalar(5);
  Matrix<Scalar> w = Matrix<Scalar>::Zero(m, m);
  auto id = [cols](Index r, Index c) { return r * cols + c; };
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index i = id(r, c);
      w(i, i) = fifth;
      w(i, id((r + 1) % rows, c)) = fifth;
      w(i, id((r + rows - 1) % rows, c)) = fifth;
      w(i, id(r, (c + 1) % cols)) = fifth;
      w(i, id(r, (c + cols - 1) % cols)) = fifth;
    }
  }
  return DecGraph<Scalar>::from_weights(std::move(w));
}

template <typename Scalar>
struct SymmetricEigen {
  Vector<Scalar> values;   // ascending
  Matrix<Scalar> vectors;  // column k pairs with values(k)
};

/// Cyclic Jacobi eigensolver for a dense symmetric matrix.
///
/// Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm drops
/// to rel_tol times the Frobenius norm of the input.
template <typename Scalar>
SymmetricEigen<Scalar> jacobi_eigen(Matrix<Scalar> a, Scalar rel_tol = Scalar(1e-13), int max_sweeps = 100) {
  const Index n = a.rows();
  Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);
  const Scalar target = rel_tol * a.norm();

  auto off_norm = [&a, n] {
    Scalar sum = 0;
    for (Index p = 0; p < n; ++p)
      for (Index q = 0; q < n; ++q)
        if (p != q) sum += a(p, q) * a(p, q);
    return std::sqrt(sum);
  };

  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > target; ++sweep) {
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const Scalar c = Scalar(1) / std::sqrt(t * t + 1);
        const Scalar s = t * c;
        for (Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_norm() > target) throw NumericalFailure("Jacobi eigensolver did not converge");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&a](Index l, Index r) { return a(l, l) < a(r, r); });

  SymmetricEigen<Scalar> out{Vector<Scalar>(n), Matrix<Scalar>(n, n)};
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

/// Spectral data of I - W.
///
/// A single node has no consensus constraint: I - W = 0, so lambda_max = 0,
/// lambda_second_smallest = 0 and kappa_g is taken as 1.
template <typename Scalar>
struct SpectralInfo {
  Scalar lambda_max = 0;
  Scalar lambda_second_smallest = 0;
  Scalar kappa_g = 1;
  Vector<Scalar> eigvals;
  Matrix<Scalar> eigvecs;

  [[nodiscard]] Index nodes() const { return eigvals.size(); }
  [[nodiscard]] bool trivial() const { return nodes() == 1; }
};

template <typename Scalar>
SpectralInfo<Scalar> spectral(const DecGraph<Scalar>& g) {
  auto eig = jacobi_eigen<Scalar>(g.laplacian());
  SpectralInfo<Scalar> info;
  info.eigvals = std::move(eig.values);
  info.eigvecs = std::move(eig.vectors);
  if (g.nodes() == 1) return info;

  info.lambda_second_smallest = info.eigvals(1);
  if (!(info.lambda_second_smallest > Scalar(1e-10))) {
    throw TopologyError("graph is disconnected: second smallest eigenvalue of I - W is " +
                        std::to_string(static_cast<double>(info.lambda_second_smallest)));
  }
  info.lambda_max = info.eigvals(g.nodes() - 1);
  info.kappa_g = info.lambda_max / info.lambda_second_smallest;
  return info;
}

/// Output block i = sum_j W_ij V_j.
template <typename Scalar, typename Derived>
Stack<Scalar> mix(const DecGraph<Scalar>& g, const Eigen::MatrixBase<Derived>& v) {
  if (v.cols() != g.nodes()) throw std::invalid_argument("mix: expected one column per node");
  // W is symmetric, so (V W)_{:,i} = sum_j W_ji V_j = sum_j W_ij V_j.
  return v * g.weights();
}

/// Squared norm of a stack in the (I - W)^+ metric, summed over the nonzero
/// eigenpairs of I - W; the consensus direction (eigenvalue 0) is skipped.
template <typename Scalar, typename Derived>
Scalar pinv_weighted_sqnorm(const SpectralInfo<Scalar>& info, const Eigen::MatrixBase<Derived>& v) {
  if (v.cols() != info.nodes()) throw std::invalid_argument("pinv_weighted_sqnorm: expected one column per node");
  Scalar sum = 0;
  for (Index e = 1; e < info.nodes(); ++e) {
    const Vector<Scalar> coeff = v * info.eigvecs.col(e);
    sum += coeff.squaredNorm() / info.eigvals(e);
  }
  return sum;
}

}  // namespace decsaddle
