#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace Eigen {
template <>
struct NumTraits<__int128> : GenericNumTraits<__int128> {
  enum { IsSigned = 1, IsInteger = 1, IsComplex = 0, RequireInitialization = 0, ReadCost = 1, AddCost = 1, MulCost = 3 };
};
}  // namespace Eigen

namespace stheta {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using IntMatrix = Matrix<std::int64_t>;
using IntVector = Vector<std::int64_t>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Exact Fourier coefficient. Arithmetic goes through the checked helpers
/// below; overflow throws instead of wrapping.
using Coefficient = __int128;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown lattice name or malformed catalog entry.
class CatalogError : public Error {
 public:
  using Error::Error;
};

/// Operands with incompatible genus, width, index or weight.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed document or invariant violation while loading.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Enumeration node budget exhausted.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Argument outside the operation's domain (genus 0 for Phi, bad point, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

inline Coefficient checked_add(Coefficient a, Coefficient b) {
  Coefficient r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("coefficient overflow in addition");
  return r;
}

inline Coefficient checked_mul(Coefficient a, Coefficient b) {
  Coefficient r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("coefficient overflow in multiplication");
  return r;
}

std::string to_decimal(Coefficient value);
Coefficient parse_decimal(std::string_view text);

/// Narrowing with a loud failure; matrix keys are stored as 32-bit entries.
std::int32_t narrow_entry(std::int64_t value);

// ---------------------------------------------------------------------------
// Exact integer linear algebra on symmetric matrices.

/// Fraction-free (Bareiss) determinant; intermediate values are checked.
template <typename Derived>
Coefficient exact_determinant(const Eigen::MatrixBase<Derived>& a);

/// True iff every leading principal minor is strictly positive.
template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& a);

/// Exact positive-semidefiniteness of a symmetric integer matrix.
///
/// Symmetric fraction-free elimination: a zero pivot demands a zero row in the
/// current Schur complement (the row is then dropped), a negative pivot fails.
/// Every surviving entry is a principal minor quotient, so all divisions are
/// exact.
template <typename Derived>
bool is_positive_semidefinite(const Eigen::MatrixBase<Derived>& a);

bool is_symmetric(const IntMatrix& a);

/// Shape-aware equality (Eigen asserts on mismatched sizes).
inline bool same_matrix(const IntMatrix& a, const IntMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

namespace detail {
Coefficient bareiss_determinant(Matrix<Coefficient> work);
bool bareiss_positive_definite(Matrix<Coefficient> work);
bool symmetric_psd(Matrix<Coefficient> work);
}  // namespace detail

template <typename Derived>
Coefficient exact_determinant(const Eigen::MatrixBase<Derived>& a) {
  return detail::bareiss_determinant(a.template cast<Coefficient>());
}

template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& a) {
  return detail::bareiss_positive_definite(a.template cast<Coefficient>());
}

template <typename Derived>
bool is_positive_semidefinite(const Eigen::MatrixBase<Derived>& a) {
  return detail::symmetric_psd(a.template cast<Coefficient>());
}

}  // namespace stheta
