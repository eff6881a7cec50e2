#pragma once

// Fincke-Pohst enumeration of lattice points in an ellipsoid.
//
// Bounds come from a floating Cholesky factorization widened by a small slack;
// acceptance uses the exact integer norm, maintained incrementally per level.
// Partial norms are not lower bounds, so only the leaves test them.

#include "stheta/core.hpp"

#include <cmath>
#include <vector>

namespace stheta::detail {

class EllipsoidWalker {
 public:
  EllipsoidWalker(const IntMatrix& gram, std::int64_t bound) : m_(gram.rows()), bound_(bound) {
    const std::size_t m = static_cast<std::size_t>(m_);
    // Walk the coordinates in the given or the reversed order, whichever the
    // Gaussian heuristic predicts to visit fewer nodes.
    IntMatrix reversed = gram.reverse();
    Eigen::LLT<Eigen::MatrixXd> forward_llt(gram.cast<double>());
    Eigen::LLT<Eigen::MatrixXd> reverse_llt(reversed.cast<double>());
    if (forward_llt.info() != Eigen::Success || reverse_llt.info() != Eigen::Success)
      throw DomainError("Gram matrix is not positive definite");
    reversed_ = estimated_nodes(reverse_llt.matrixL(), bound) < estimated_nodes(forward_llt.matrixL(), bound);
    const IntMatrix& g = reversed_ ? reversed : gram;
    const Eigen::MatrixXd l = reversed_ ? Eigen::MatrixXd(reverse_llt.matrixL()) : Eigen::MatrixXd(forward_llt.matrixL());
    diag_.resize(m);
    mu_.assign(m * m, 0.0);
    gram_.assign(m * m, 0);
    for (Eigen::Index i = 0; i < m_; ++i) {
      diag_[static_cast<std::size_t>(i)] = l(i, i) * l(i, i);
      for (Eigen::Index j = 0; j < m_; ++j) {
        gram_[at(i, j)] = g(i, j);
        if (j > i) mu_[at(i, j)] = l(j, i) / l(i, i);
      }
    }
    x_.assign(m, 0);
    out_.assign(m, 0);
    tail_.assign(m + 1, 0);
    // Row k holds suffix sums over coordinates j >= column: centre_sum for the
    // Cholesky offsets, cross_sum for the Gram cross terms.
    centre_sum_.assign(m * (m + 1), 0.0);
    cross_sum_.assign(m * (m + 1), 0);
    slack_ = 1e-7 * (1.0 + static_cast<double>(bound));
  }

  /// visit(const std::int64_t* coords, std::int64_t norm) for every x with
  /// Q(x) <= bound, the zero vector included. Order is deterministic.
  template <typename Visitor>
  void run(Visitor&& visit) {
    if (bound_ < 0) return;
    if (m_ == 0) {
      visit(x_.data(), std::int64_t{0});
      return;
    }
    walk(m_ - 1, 0.0, visit);
  }

  /// Histogram specialization: counts[n] += 1 for every point of norm n.
  void count(std::vector<std::uint64_t>& counts) {
    counts.assign(static_cast<std::size_t>(bound_ < 0 ? 0 : bound_ + 1), 0);
    if (bound_ < 0) return;
    if (m_ == 0) {
      counts[0] = 1;
      return;
    }
    count_walk(m_ - 1, 0.0, counts, 1, true);
  }

 private:
  // sum over k of vol(B_k) * bound^(k/2) / sqrt(product of the k outermost pivots)
  static double estimated_nodes(const Eigen::MatrixXd& l, std::int64_t bound) {
    const Eigen::Index m = l.rows();
    const double log_bound = std::log(static_cast<double>(std::max<std::int64_t>(bound, 1)));
    double log_pivots = 0.0;
    double total = 0.0;
    for (Eigen::Index k = 1; k <= m; ++k) {
      log_pivots += 2.0 * std::log(l(m - k, m - k));
      const double kd = static_cast<double>(k);
      const double log_volume = 0.5 * kd * std::log(M_PI) - std::lgamma(0.5 * kd + 1.0);
      total += std::exp(log_volume + 0.5 * kd * log_bound - 0.5 * log_pivots);
    }
    return total;
  }

  const std::int64_t* coordinates() {
    if (!reversed_) return x_.data();
    for (std::size_t i = 0; i < x_.size(); ++i) out_[i] = x_[x_.size() - 1 - i];
    return out_.data();
  }

  std::size_t at(Eigen::Index i, Eigen::Index j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j);
  }
  std::size_t sum_at(Eigen::Index row, Eigen::Index col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(m_ + 1) + static_cast<std::size_t>(col);
  }

  struct Range {
    std::int64_t lo, hi;
    double center;
  };

  Range range(Eigen::Index i, double used) const {
    const double center = -centre_sum_[sum_at(i, i + 1)];
    const double remaining = static_cast<double>(bound_) + slack_ - used;
    if (remaining < 0) return {1, 0, center};
    const double radius = std::sqrt(remaining / diag_[static_cast<std::size_t>(i)]);
    return {static_cast<std::int64_t>(std::ceil(center - radius)), static_cast<std::int64_t>(std::floor(center + radius)),
            center};
  }

  // Refreshes the suffix sums of every lower row after x_i changed.
  void push(Eigen::Index i, std::int64_t v) {
    x_[static_cast<std::size_t>(i)] = v;
    const double dv = static_cast<double>(v);
    for (Eigen::Index k = 0; k < i; ++k) {
      centre_sum_[sum_at(k, i)] = centre_sum_[sum_at(k, i + 1)] + mu_[at(k, i)] * dv;
      cross_sum_[sum_at(k, i)] = cross_sum_[sum_at(k, i + 1)] + gram_[at(k, i)] * v;
    }
  }

  template <typename Visitor>
  void walk(Eigen::Index i, double used, Visitor& visit) {
    const Range r = range(i, used);
    const std::int64_t s = cross_sum_[sum_at(i, i + 1)];
    const std::int64_t gii = gram_[at(i, i)];
    const std::int64_t tail = tail_[static_cast<std::size_t>(i) + 1];
    for (std::int64_t v = r.lo; v <= r.hi; ++v) {
      const std::int64_t exact = gii * v * v + 2 * v * s + tail;
      if (i == 0) {
        x_[0] = v;
        if (exact <= bound_) visit(coordinates(), exact);
      } else {
        push(i, v);
        tail_[static_cast<std::size_t>(i)] = exact;
        const double d = static_cast<double>(v) - r.center;
        walk(i - 1, used + diag_[static_cast<std::size_t>(i)] * d * d, visit);
      }
    }
    push(i, 0);
  }

  // While every higher coordinate is zero the range is symmetric about 0, so
  // only v >= 0 is walked and v > 0 counts for both signs. Level 0 is inlined
  // into level 1: leaves dominate the node count.
  void count_walk(Eigen::Index i, double used, std::vector<std::uint64_t>& counts, std::uint64_t weight,
                  bool leading_zero) {
    const Range r = range(i, used);
    const std::int64_t s = cross_sum_[sum_at(i, i + 1)];
    const std::int64_t gii = gram_[at(i, i)];
    const std::int64_t tail = tail_[static_cast<std::size_t>(i) + 1];
    const std::int64_t lo = leading_zero ? 0 : r.lo;
    if (i == 0) {
      count_leaves(lo, r.hi, gii, s, tail, counts.data(), weight, leading_zero);
      return;
    }
    if (i == 1) {
      const double mu01 = mu_[at(0, 1)];
      const std::int64_t g01 = gram_[at(0, 1)];
      const std::int64_t g00 = gram_[at(0, 0)];
      const double c0 = centre_sum_[sum_at(0, 2)];
      const std::int64_t s0 = cross_sum_[sum_at(0, 2)];
      const double inv_d0 = 1.0 / diag_[0];
      const double limit = static_cast<double>(bound_) + slack_ - used;
      for (std::int64_t v = lo; v <= r.hi; ++v) {
        const double d = static_cast<double>(v) - r.center;
        const double remaining = limit - diag_[1] * d * d;
        if (remaining < 0) continue;
        const double center = -(c0 + mu01 * static_cast<double>(v));
        const double radius = std::sqrt(remaining * inv_d0);
        const bool zero_above = leading_zero && v == 0;
        const std::int64_t leaf_lo = zero_above ? 0 : static_cast<std::int64_t>(std::ceil(center - radius));
        count_leaves(leaf_lo, static_cast<std::int64_t>(std::floor(center + radius)), g00, s0 + g01 * v,
                     gii * v * v + 2 * v * s + tail, counts.data(), leading_zero && v > 0 ? 2 * weight : weight,
                     zero_above);
      }
      return;
    }
    for (std::int64_t v = lo; v <= r.hi; ++v) {
      push(i, v);
      tail_[static_cast<std::size_t>(i)] = gii * v * v + 2 * v * s + tail;
      const double d = static_cast<double>(v) - r.center;
      count_walk(i - 1, used + diag_[static_cast<std::size_t>(i)] * d * d, counts,
                 leading_zero && v > 0 ? 2 * weight : weight, leading_zero && v == 0);
    }
    push(i, 0);
  }

  void count_leaves(std::int64_t lo, std::int64_t hi, std::int64_t g00, std::int64_t s, std::int64_t tail,
                    std::uint64_t* out, std::uint64_t weight, bool leading_zero) const {
    for (std::int64_t v = lo; v <= hi; ++v) {
      const std::int64_t exact = g00 * v * v + 2 * v * s + tail;
      if (exact <= bound_) out[exact] += (leading_zero && v > 0) ? 2 * weight : weight;
    }
  }

  Eigen::Index m_;
  std::int64_t bound_;
  std::vector<double> diag_;
  std::vector<double> mu_;
  std::vector<std::int64_t> gram_;
  bool reversed_ = false;
  std::vector<std::int64_t> x_;
  std::vector<std::int64_t> out_;
  std::vector<std::int64_t> tail_;
  std::vector<double> centre_sum_;
  std::vector<std::int64_t> cross_sum_;
  double slack_;
};

}  // namespace stheta::detail
