#include "stheta/core.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace stheta {

std::string to_decimal(Coefficient value) {
  if (value == 0) return "0";
  const bool negative = value < 0;
  // Work with the negative magnitude so that the minimum value is representable.
  Coefficient v = negative ? value : -value;
  std::string digits;
  while (v != 0) {
    digits.push_back(static_cast<char>('0' - static_cast<int>(v % 10)));
    v /= 10;
  }
  if (negative) digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

Coefficient parse_decimal(std::string_view text) {
  if (text.empty()) throw FormatError("empty decimal string");
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  if (pos == text.size()) throw FormatError("decimal string has no digits: '" + std::string(text) + "'");
  Coefficient v = 0;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c < '0' || c > '9') throw FormatError("invalid character in decimal string: '" + std::string(text) + "'");
    v = checked_add(checked_mul(v, 10), -(c - '0'));
  }
  if (!negative) {
    if (v == std::numeric_limits<Coefficient>::min()) throw OverflowError("decimal value out of range");
    v = -v;
  }
  return v;
}

std::int32_t narrow_entry(std::int64_t value) {
  if (value < std::numeric_limits<std::int32_t>::min() || value > std::numeric_limits<std::int32_t>::max())
    throw OverflowError("matrix entry does not fit in 32 bits: " + std::to_string(value));
  return static_cast<std::int32_t>(value);
}

bool is_symmetric(const IntMatrix& a) { return a.rows() == a.cols() && a == a.transpose(); }

namespace detail {

namespace {

Coefficient bareiss_update(Coefficient pivot, Coefficient aij, Coefficient aik, Coefficient akj, Coefficient previous) {
  const Coefficient lhs = checked_mul(pivot, aij);
  const Coefficient rhs = checked_mul(aik, akj);
  Coefficient diff;
  if (__builtin_sub_overflow(lhs, rhs, &diff)) throw OverflowError("overflow in exact elimination");
  return diff / previous;
}

}  // namespace

Coefficient bareiss_determinant(Matrix<Coefficient> work) {
  const Eigen::Index n = work.rows();
  if (n != work.cols()) throw ShapeError("determinant of a non-square matrix");
  if (n == 0) return 1;
  Coefficient previous = 1;
  Coefficient sign = 1;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (work(k, k) == 0) {
      Eigen::Index swap = k + 1;
      while (swap < n && work(swap, k) == 0) ++swap;
      if (swap == n) return 0;
      work.row(k).swap(work.row(swap));
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = k + 1; j < n; ++j)
        work(i, j) = bareiss_update(work(k, k), work(i, j), work(i, k), work(k, j), previous);
    previous = work(k, k);
  }
  return sign * work(n - 1, n - 1);
}

bool bareiss_positive_definite(Matrix<Coefficient> work) {
  const Eigen::Index n = work.rows();
  Coefficient previous = 1;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (work(k, k) <= 0) return false;
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = k + 1; j < n; ++j)
        work(i, j) = bareiss_update(work(k, k), work(i, j), work(i, k), work(k, j), previous);
    previous = work(k, k);
  }
  return true;
}

bool symmetric_psd(Matrix<Coefficient> work) {
  const Eigen::Index n = work.rows();
  if (n != work.cols()) throw ShapeError("psd test of a non-square matrix");
  std::vector<Eigen::Index> active(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;
  Coefficient previous = 1;
  while (!active.empty()) {
    const Eigen::Index k = active.front();
    active.erase(active.begin());
    const Coefficient pivot = work(k, k);
    if (pivot < 0) return false;
    if (pivot == 0) {
      for (Eigen::Index j : active)
        if (work(k, j) != 0) return false;
      continue;
    }
    for (Eigen::Index i : active)
      for (Eigen::Index j : active)
        if (j >= i) {
          work(i, j) = bareiss_update(pivot, work(i, j), work(i, k), work(k, j), previous);
          work(j, i) = work(i, j);
        }
    previous = pivot;
  }
  return true;
}

}  // namespace detail
}  // namespace stheta
