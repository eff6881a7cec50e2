#pragma once

#include "stheta/core.hpp"
#include "stheta/lattice.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/inlined_vector.h>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stheta {

/// Symmetric half-integral matrix T, held exactly as its doubling D = 2T
/// (integral, even diagonal).
class HalfIntegralMatrix {
 public:
  explicit HalfIntegralMatrix(IntMatrix doubled);
  static HalfIntegralMatrix zero(int genus) { return HalfIntegralMatrix(IntMatrix::Zero(genus, genus)); }

  int genus() const { return static_cast<int>(doubled_.rows()); }
  const IntMatrix& doubled() const { return doubled_; }
  std::int64_t trace() const { return doubled_.trace() / 2; }

  friend bool operator==(const HalfIntegralMatrix& a, const HalfIntegralMatrix& b) { return same_matrix(a.doubled_, b.doubled_); }

 private:
  IntMatrix doubled_;
};

/// Jacobi index M of degree h, held as 2M (integral, symmetric, even diagonal,
/// positive semidefinite).
class JacobiIndex {
 public:
  explicit JacobiIndex(IntMatrix doubled);
  explicit JacobiIndex(const EvenLattice& lattice) : JacobiIndex(lattice.gram()) {}

  int width() const { return static_cast<int>(doubled_.rows()); }
  const IntMatrix& doubled() const { return doubled_; }
  bool positive_definite() const { return is_positive_definite(doubled_); }

  friend bool operator==(const JacobiIndex& a, const JacobiIndex& b) { return same_matrix(a.doubled_, b.doubled_); }

 private:
  IntMatrix doubled_;
};

bool is_psd_half_integral(const HalfIntegralMatrix& t);

/// The doubled block matrix (2T, R; R^T, 2M).
IntMatrix doubled_block(const HalfIntegralMatrix& t, const IntMatrix& r, const JacobiIndex& index);

/// (T, R/2; R^T/2, M) >= 0, tested exactly on the doubling.
bool block_psd(const HalfIntegralMatrix& t, const IntMatrix& r, const JacobiIndex& index);

// ---------------------------------------------------------------------------
// Flat index keys.
//
// A Siegel key is the lower triangle of 2T read row by row
// (D00, D10, D11, D20, ...); a Jacobi key appends R (g x h) row-major.

using IndexKey = std::vector<std::int32_t>;
using KeyView = std::span<const std::int32_t>;

constexpr std::size_t triangle_size(int genus) {
  return static_cast<std::size_t>(genus) * static_cast<std::size_t>(genus + 1) / 2;
}
constexpr std::size_t triangle_position(int row, int col) {
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(row + 1) / 2 + static_cast<std::size_t>(col);
}

void write_doubled(const IntMatrix& doubled, std::int32_t* out);
IndexKey siegel_key(const HalfIntegralMatrix& t);
IndexKey jacobi_key(const HalfIntegralMatrix& t, const IntMatrix& r);
IntMatrix doubled_from_key(KeyView key, int genus);
IntMatrix r_from_key(KeyView key, int genus, int width);
std::int64_t key_trace(KeyView key, int genus);

/// Total order on keys that coincides with byte order of canonical_key().
bool canonical_less(KeyView a, KeyView b);

/// Injective, deterministic byte encoding of (T, R): every entry of the lower
/// triangle of 2T and then of R as a sign character ('+' for >= 0) followed by
/// ten zero-padded digits, separated by ',' and with ';' before R.
std::string canonical_key(const HalfIntegralMatrix& t, const std::optional<IntMatrix>& r = std::nullopt);
std::string canonical_key(KeyView key, int genus);

/// Immutable table of nonzero coefficients, keys sorted by canonical_less.
class CoefficientTable {
 public:
  explicit CoefficientTable(std::size_t stride = 0) : stride_(stride) {}

  /// Keys must be sorted, unique and paired with nonzero coefficients.
  static CoefficientTable from_sorted(std::size_t stride, std::vector<std::int32_t> keys,
                                      std::vector<Coefficient> coeffs);

  std::size_t stride() const { return stride_; }
  std::size_t size() const { return coeffs_.size(); }
  bool empty() const { return coeffs_.empty(); }
  KeyView key(std::size_t i) const { return {keys_.data() + i * stride_, stride_}; }
  Coefficient coefficient(std::size_t i) const { return coeffs_[i]; }
  /// Zero when the key is absent.
  Coefficient find(KeyView key) const;

  friend bool operator==(const CoefficientTable&, const CoefficientTable&) = default;

 private:
  std::size_t stride_;
  std::vector<std::int32_t> keys_;
  std::vector<Coefficient> coeffs_;
};

/// Hash-map builder; finish() prunes zeros and sorts.
class TermAccumulator {
 public:
  explicit TermAccumulator(std::size_t stride) : stride_(stride) {}

  void add(KeyView key, Coefficient c);
  void merge(const TermAccumulator& other);
  std::size_t size() const { return map_.size(); }
  CoefficientTable finish() const;

 private:
  using BuildKey = absl::InlinedVector<std::int32_t, 40>;

  std::size_t stride_;
  absl::flat_hash_map<BuildKey, Coefficient> map_;
};

/// Marks constructors that skip the per-term support check; used by producers
/// whose output is psd by construction.
struct TrustedTerms {};

/// Truncated Fourier expansion sum_T a(T) e(sigma(T tau)) of a Siegel form,
/// complete for trace(T) <= bound.
class SiegelExpansion {
 public:
  SiegelExpansion(int genus, int weight, int bound, CoefficientTable terms);
  SiegelExpansion(TrustedTerms, int genus, int weight, int bound, CoefficientTable terms);

  static SiegelExpansion zero(int genus, int weight, int bound);
  static SiegelExpansion constant(int genus, int weight, int bound, Coefficient c = 1);

  int genus() const { return genus_; }
  int weight() const { return weight_; }
  int bound() const { return bound_; }
  const CoefficientTable& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  HalfIntegralMatrix index(std::size_t i) const { return HalfIntegralMatrix(doubled_from_key(terms_.key(i), genus_)); }
  Coefficient coefficient(const HalfIntegralMatrix& t) const;

  friend bool operator==(const SiegelExpansion&, const SiegelExpansion&) = default;

 private:
  void check_shape() const;

  int genus_;
  int weight_;
  int bound_;
  CoefficientTable terms_;
};

/// Truncated expansion sum c(T,R) e(sigma(T tau)) e(sigma(R z)) of a Jacobi
/// form of index M on H_g x C^(h,g), complete for trace(T) <= bound.
class JacobiExpansion {
 public:
  JacobiExpansion(int genus, JacobiIndex index, int weight, int bound, CoefficientTable terms);
  JacobiExpansion(TrustedTerms, int genus, JacobiIndex index, int weight, int bound, CoefficientTable terms);

  static JacobiExpansion zero(int genus, JacobiIndex index, int weight, int bound);

  int genus() const { return genus_; }
  int width() const { return index_.width(); }
  const JacobiIndex& index() const { return index_; }
  int weight() const { return weight_; }
  int bound() const { return bound_; }
  const CoefficientTable& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  HalfIntegralMatrix t_index(std::size_t i) const {
    return HalfIntegralMatrix(doubled_from_key(terms_.key(i), genus_));
  }
  IntMatrix r_index(std::size_t i) const { return r_from_key(terms_.key(i), genus_, width()); }
  Coefficient coefficient(const HalfIntegralMatrix& t, const IntMatrix& r) const;

  friend bool operator==(const JacobiExpansion&, const JacobiExpansion&) = default;

 private:
  void check_shape() const;

  int genus_;
  JacobiIndex index_;
  int weight_;
  int bound_;
  CoefficientTable terms_;
};

/// Coefficientwise integer combination; result bound is the minimum bound.
SiegelExpansion linear_combine(std::span<const Coefficient> coeffs, std::span<const SiegelExpansion> expansions);
JacobiExpansion linear_combine(std::span<const Coefficient> coeffs, std::span<const JacobiExpansion> expansions);

/// Drops every term with trace(T) > bound (bound may only decrease).
SiegelExpansion truncate(const SiegelExpansion& e, int bound);
JacobiExpansion truncate(const JacobiExpansion& e, int bound);

struct SingularReport {
  bool all_singular = true;
  std::optional<IndexKey> witness;
};

/// Checks that every stored coefficient sits on det(T, R/2; R^T/2, M) = 0.
SingularReport singular_support_check(const JacobiExpansion& f);

}  // namespace stheta
