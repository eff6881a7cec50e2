#pragma once

#include "stheta/core.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stheta {

/// Positive definite even integral lattice given by its Gram matrix.
///
/// The pairing is Q(x, y) = x^T G y on integer coordinate vectors; the norm of
/// x is Q(x, x). Construction rejects asymmetric, odd-diagonal or indefinite
/// Gram matrices, so every EvenLattice value satisfies these invariants.
class EvenLattice {
 public:
  explicit EvenLattice(IntMatrix gram, std::string name = {});

  Eigen::Index rank() const { return gram_.rows(); }
  const IntMatrix& gram() const { return gram_; }
  const std::string& name() const { return name_; }
  Coefficient determinant() const;

  std::int64_t inner(const IntVector& a, const IntVector& b) const { return a.dot(gram_ * b); }
  std::int64_t norm(const IntVector& v) const { return inner(v, v); }

  friend bool operator==(const EvenLattice& a, const EvenLattice& b) { return same_matrix(a.gram_, b.gram_); }

 private:
  IntMatrix gram_;
  std::string name_;
};

EvenLattice direct_sum(const EvenLattice& a, const EvenLattice& b);

bool is_even_unimodular(const EvenLattice& lattice);

/// D_n^+ for n divisible by 8 (E8 for n = 8), in the integral basis
/// {1/2(e1 + en) - 1/2(e2 + ... + e_{n-1}), e1 + e2, e2 - e1, ..., e_{n-1} - e_{n-2}}.
EvenLattice dn_plus_lattice(int n, std::string name = {});

/// Sign-reduced short vectors: one representative of each +-pair, namely the
/// one whose first nonzero coordinate is positive.
struct ShortVectors {
  static constexpr std::string_view sign_convention = "first-nonzero-coordinate-positive";
  std::int64_t bound = 0;
  std::vector<IntVector> vectors;   // sorted by (norm, lexicographic coordinates)
  std::vector<std::int64_t> norms;  // parallel to vectors
};

/// All v with 0 < Q(v,v) <= bound, one per sign pair. `bound` must be even and
/// nonnegative.
ShortVectors short_vectors(const EvenLattice& lattice, std::int64_t bound);

/// mu(L) = min { Q(v,v) : v != 0 }.
std::int64_t min_norm(const EvenLattice& lattice);

struct NormProfile {
  std::int64_t bound = 0;
  /// norm -> number of vectors (both signs) of that norm; zero vector excluded.
  std::map<std::int64_t, Coefficient> counts;

  Coefficient count(std::int64_t norm) const {
    auto it = counts.find(norm);
    return it == counts.end() ? 0 : it->second;
  }
  friend bool operator==(const NormProfile&, const NormProfile&) = default;
};

NormProfile count_vectors_by_norm(const EvenLattice& lattice, std::int64_t bound);

/// Number of lattice vectors of each norm 0..bound, zero vector included,
/// computed by streaming enumeration (nothing is materialized).
std::vector<std::uint64_t> norm_histogram(const EvenLattice& lattice, std::int64_t bound);

/// Named lattices: the builtin E8 and D16plus plus any JSON-registered entries.
/// Lookup accepts direct-sum expressions such as "E8+E8+E8".
class LatticeCatalog {
 public:
  static LatticeCatalog builtin();

  void add(const EvenLattice& lattice, bool allow_non_unimodular = false);
  /// Accepts a single {"name","gram","allow_non_unimodular"?} object or an array of them.
  void load_json(const std::filesystem::path& path);
  void load_json_text(std::string_view text);

  EvenLattice lookup(std::string_view expression) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, EvenLattice, std::less<>> entries_;
};

/// Lookup in the builtin catalog.
EvenLattice catalog_lattice(std::string_view expression);

}  // namespace stheta
