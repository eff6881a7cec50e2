#include "stheta/theta.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

namespace stheta {

namespace {

// ---------------------------------------------------------------------------
// Vector tables: coordinates plus their images under the Gram matrix, so every
// inner product is a single dot product.

struct VectorTable {
  int rank = 0;
  std::vector<std::int32_t> coords;
  std::vector<std::int64_t> images;
  std::vector<std::int64_t> norms;

  std::size_t size() const { return norms.size(); }
  const std::int32_t* coord(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(rank); }
  const std::int64_t* image(std::size_t i) const { return images.data() + i * static_cast<std::size_t>(rank); }

  std::int64_t inner(std::size_t i, std::size_t j) const {
    const std::int32_t* a = coord(i);
    const std::int64_t* b = image(j);
    std::int64_t s = 0;
    for (int k = 0; k < rank; ++k) s += a[k] * b[k];
    return s;
  }

  void push(const IntVector& v, const IntMatrix& gram, std::int64_t norm) {
    const IntVector image = gram * v;
    for (int k = 0; k < rank; ++k) {
      coords.push_back(narrow_entry(v(k)));
      images.push_back(image(k));
    }
    norms.push_back(norm);
  }

  /// [first, last) of the entries with the given norm (table sorted by norm).
  std::pair<std::size_t, std::size_t> norm_range(std::int64_t norm) const {
    auto lo = std::lower_bound(norms.begin(), norms.end(), norm);
    auto hi = std::upper_bound(norms.begin(), norms.end(), norm);
    return {static_cast<std::size_t>(lo - norms.begin()), static_cast<std::size_t>(hi - norms.begin())};
  }
};

VectorTable sign_reduced_table(const EvenLattice& lattice, std::int64_t bound) {
  VectorTable table;
  table.rank = static_cast<int>(lattice.rank());
  const ShortVectors sv = short_vectors(lattice, bound);
  for (std::size_t i = 0; i < sv.vectors.size(); ++i) table.push(sv.vectors[i], lattice.gram(), sv.norms[i]);
  return table;
}

/// Zero vector first, then each short vector followed by its negative.
VectorTable signed_table(const EvenLattice& lattice, std::int64_t bound) {
  VectorTable table;
  table.rank = static_cast<int>(lattice.rank());
  table.push(IntVector::Zero(lattice.rank()), lattice.gram(), 0);
  const ShortVectors sv = short_vectors(lattice, bound);
  for (std::size_t i = 0; i < sv.vectors.size(); ++i) {
    table.push(sv.vectors[i], lattice.gram(), sv.norms[i]);
    table.push(-sv.vectors[i], lattice.gram(), sv.norms[i]);
  }
  return table;
}

class BudgetMeter {
 public:
  BudgetMeter(std::atomic<std::uint64_t>& used, std::uint64_t budget) : used_(used), budget_(budget) {}
  ~BudgetMeter() { used_.fetch_add(local_, std::memory_order_relaxed); }
  BudgetMeter(const BudgetMeter&) = delete;
  BudgetMeter& operator=(const BudgetMeter&) = delete;

  void tick() {
    if (++local_ == kBatch) flush();
  }

 private:
  static constexpr std::uint64_t kBatch = 1 << 14;

  void flush() {
    const std::uint64_t total = used_.fetch_add(local_, std::memory_order_relaxed) + local_;
    local_ = 0;
    if (total > budget_)
      throw BudgetExceeded("enumeration exceeded the node budget of " + std::to_string(budget_));
  }

  std::atomic<std::uint64_t>& used_;
  std::uint64_t budget_;
  std::uint64_t local_ = 0;
};

// ---------------------------------------------------------------------------
// Gram matrices of short tuples packed into one 128-bit integer
// (mixed radix over the lower triangle, entries shifted to be nonnegative).

using Packed = unsigned __int128;

struct PackedHash {
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
  std::size_t operator()(Packed k) const {
    return mix(static_cast<std::uint64_t>(k) ^ mix(static_cast<std::uint64_t>(k >> 64)));
  }
};

using PackedCounts = absl::flat_hash_map<Packed, std::uint64_t, PackedHash>;

class GramPacker {
 public:
  GramPacker(int max_len, std::int64_t max_entry) : offset_(max_entry) {
    const Packed radix = static_cast<Packed>(2 * max_entry + 1);
    Packed power = 1;
    const std::size_t positions = triangle_size(max_len);
    for (std::size_t p = 0; p < positions; ++p) {
      powers_.push_back(power);
      if (p + 1 < positions || true) {
        if (power > (~static_cast<Packed>(0)) / radix)
          throw BudgetExceeded("tuple Gram matrices too large to pack; lower the genus or bound");
        power *= radix;
      }
    }
  }

  Packed term(std::size_t position, std::int64_t value) const {
    return static_cast<Packed>(value + offset_) * powers_[position];
  }

  IntMatrix unpack(Packed key, int len) const {
    const Packed radix = static_cast<Packed>(2 * offset_ + 1);
    IntMatrix g(len, len);
    for (int i = 0; i < len; ++i)
      for (int j = 0; j <= i; ++j) {
        const Packed digit = (key / powers_[triangle_position(i, j)]) % radix;
        g(i, j) = g(j, i) = static_cast<std::int64_t>(digit) - offset_;
      }
    return g;
  }

 private:
  std::int64_t offset_;
  std::vector<Packed> powers_;
};

/// Counts sorted sequences y_1 <= ... <= y_k of sign-reduced vectors (by table
/// index), grouped by length and Gram matrix.
class OrbitCounter {
 public:
  OrbitCounter(const VectorTable& table, const GramPacker& packer, int max_len, const std::vector<std::int64_t>* required,
               BudgetMeter& meter)
      : table_(table), packer_(packer), max_len_(max_len), required_(required), meter_(meter),
        counts_(static_cast<std::size_t>(max_len) + 1), chosen_(static_cast<std::size_t>(max_len)) {}

  void record_empty() {
    if (!required_ || required_->empty()) ++counts_[0][Packed{0}];
  }

  void run_from(std::size_t first, std::int64_t budget) {
    const std::int64_t norm = table_.norms[first];
    if (norm > budget) return;
    if (required_ && norm != (*required_)[0]) return;
    chosen_[0] = first;
    meter_.tick();
    const Packed key = packer_.term(0, norm);
    if (max_len_ == 1) {
      ++counts_[1][key];
      return;
    }
    extend(1, first, budget - norm, key);
  }

  std::vector<PackedCounts>& counts() { return counts_; }

 private:
  void extend(int depth, std::size_t start, std::int64_t remaining, Packed key) {
    if (!required_ || depth == static_cast<int>(required_->size())) ++counts_[static_cast<std::size_t>(depth)][key];
    if (depth == max_len_) return;

    std::size_t lo = start;
    std::size_t hi = table_.size();
    if (required_) {
      const auto range = table_.norm_range((*required_)[static_cast<std::size_t>(depth)]);
      lo = std::max(lo, range.first);
      hi = range.second;
    }
    const bool leaf = depth + 1 == max_len_;
    PackedCounts& leaf_counts = counts_[static_cast<std::size_t>(depth) + 1];
    for (std::size_t j = lo; j < hi; ++j) {
      const std::int64_t norm = table_.norms[j];
      if (norm > remaining) break;
      meter_.tick();
      Packed next = key + packer_.term(triangle_position(depth, depth), norm);
      for (int i = 0; i < depth; ++i)
        next += packer_.term(triangle_position(depth, i), table_.inner(j, chosen_[static_cast<std::size_t>(i)]));
      if (leaf) {
        ++leaf_counts[next];
      } else {
        chosen_[static_cast<std::size_t>(depth)] = j;
        extend(depth + 1, j, remaining - norm, next);
      }
    }
  }

  const VectorTable& table_;
  const GramPacker& packer_;
  int max_len_;
  const std::vector<std::int64_t>* required_;
  BudgetMeter& meter_;
  std::vector<PackedCounts> counts_;
  std::vector<std::size_t> chosen_;
};

std::vector<PackedCounts> count_orbits(const VectorTable& table, const GramPacker& packer, int max_len,
                                       std::int64_t norm_budget, const std::vector<std::int64_t>* required,
                                       const EnumerationOptions& options) {
  std::atomic<std::uint64_t> used{0};
  const int threads = std::max(1, options.threads);
  std::vector<std::vector<PackedCounts>> partial(static_cast<std::size_t>(threads));

  auto worker = [&](int id) {
    BudgetMeter meter(used, options.node_budget);
    OrbitCounter counter(table, packer, max_len, required, meter);
    if (id == 0) counter.record_empty();
    if (max_len > 0)
      for (std::size_t first = static_cast<std::size_t>(id); first < table.size(); first += static_cast<std::size_t>(threads))
        counter.run_from(first, norm_budget);
    partial[static_cast<std::size_t>(id)] = std::move(counter.counts());
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    {
      std::vector<std::jthread> pool;
      for (int id = 0; id < threads; ++id)
        pool.emplace_back([&, id] {
          try {
            worker(id);
          } catch (...) {
            errors[static_cast<std::size_t>(id)] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<PackedCounts> merged = std::move(partial[0]);
  for (std::size_t t = 1; t < partial.size(); ++t)
    for (std::size_t k = 0; k < merged.size(); ++k)
      for (const auto& [key, count] : partial[t][k]) merged[k][key] += count;
  return merged;
}

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

/// Spreads the counted sorted sequences over their sign/permutation orbits and
/// embeds them in genus g. With `diagonal`, only placements matching the
/// prescribed doubled diagonal are produced.
void spread_orbits(const std::vector<PackedCounts>& counts, const GramPacker& packer, int genus,
                   const std::vector<std::int64_t>* diagonal, TermAccumulator& out) {
  const std::size_t stride = triangle_size(genus);
  IndexKey key(stride);
  std::vector<int> placement;
  std::vector<bool> used(static_cast<std::size_t>(genus));

  for (std::size_t k = 0; k < counts.size(); ++k) {
    const int len = static_cast<int>(k);
    for (const auto& [packed, count] : counts[k]) {
      const IntMatrix gram = packer.unpack(packed, len);
      // Equal Gram rows <=> equal vectors (positive definiteness), so the
      // stabilizer of the sequence has order prod(multiplicity!).
      std::uint64_t stabilizer = 1;
      {
        int run = 1;
        for (int i = 1; i <= len; ++i) {
          if (i < len && gram.row(i) == gram.row(i - 1)) {
            ++run;
          } else {
            stabilizer *= factorial(run);
            run = 1;
          }
        }
      }

      absl::flat_hash_map<IndexKey, std::uint64_t> hits;
      placement.assign(static_cast<std::size_t>(len), -1);
      std::fill(used.begin(), used.end(), false);

      // Fixing the first sign halves the work: a global sign flip leaves T unchanged.
      const std::uint64_t sign_patterns = len == 0 ? 1 : (std::uint64_t{1} << (len - 1));
      const std::uint64_t sign_weight = len == 0 ? 1 : 2;

      auto emit = [&] {
        for (std::uint64_t mask = 0; mask < sign_patterns; ++mask) {
          std::fill(key.begin(), key.end(), 0);
          for (int i = 0; i < len; ++i) {
            const int si = (i == 0 || !((mask >> (i - 1)) & 1)) ? 1 : -1;
            for (int j = 0; j <= i; ++j) {
              const int sj = (j == 0 || !((mask >> (j - 1)) & 1)) ? 1 : -1;
              const int p = std::max(placement[static_cast<std::size_t>(i)], placement[static_cast<std::size_t>(j)]);
              const int q = std::min(placement[static_cast<std::size_t>(i)], placement[static_cast<std::size_t>(j)]);
              key[triangle_position(p, q)] = narrow_entry(si * sj * gram(i, j));
            }
          }
          hits[key] += sign_weight;
        }
      };

      auto place = [&](auto&& self, int i) -> void {
        if (i == len) {
          emit();
          return;
        }
        for (int p = 0; p < genus; ++p) {
          if (used[static_cast<std::size_t>(p)]) continue;
          if (diagonal && (*diagonal)[static_cast<std::size_t>(p)] != gram(i, i)) continue;
          used[static_cast<std::size_t>(p)] = true;
          placement[static_cast<std::size_t>(i)] = p;
          self(self, i + 1);
          used[static_cast<std::size_t>(p)] = false;
        }
      };
      place(place, 0);

      for (const auto& [target, n] : hits) {
        if (n % stabilizer != 0) throw Error("internal error: orbit count not divisible by stabilizer order");
        out.add(target, checked_mul(static_cast<Coefficient>(count), static_cast<Coefficient>(n / stabilizer)));
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Coefficient representation_count(const EvenLattice& lattice, const HalfIntegralMatrix& t,
                                  const EnumerationOptions& options) {
  const int g = t.genus();
  const IntMatrix& d = t.doubled();
  if (!is_psd_half_integral(t)) return 0;
  std::int64_t max_norm = 0;
  for (int p = 0; p < g; ++p) max_norm = std::max(max_norm, d(p, p));
  const VectorTable table = signed_table(lattice, max_norm);

  std::atomic<std::uint64_t> used{0};
  BudgetMeter meter(used, options.node_budget);
  std::vector<std::size_t> chosen(static_cast<std::size_t>(g));
  Coefficient total = 0;

  // A zero diagonal entry forces the zero vector (index 0 of the table).
  auto search = [&](auto&& self, int p) -> void {
    if (p == g) {
      total = checked_add(total, 1);
      return;
    }
    std::pair<std::size_t, std::size_t> range = table.norm_range(d(p, p));
    for (std::size_t j = range.first; j < range.second; ++j) {
      meter.tick();
      bool ok = true;
      for (int q = 0; q < p && ok; ++q) ok = table.inner(j, chosen[static_cast<std::size_t>(q)]) == d(p, q);
      if (!ok) continue;
      chosen[static_cast<std::size_t>(p)] = j;
      self(self, p + 1);
    }
  };
  search(search, 0);
  return total;
}

SiegelExpansion siegel_theta(const EvenLattice& lattice, int genus, int bound, const EnumerationOptions& options) {
  if (genus < 0) throw DomainError("genus must be nonnegative");
  if (bound < 0) throw DomainError("trace bound must be nonnegative");
  if (lattice.rank() % 2 != 0) throw DomainError("theta series weight rank/2 must be an integer");
  const int weight = static_cast<int>(lattice.rank() / 2);
  if (genus == 0) return SiegelExpansion::constant(0, weight, bound);

  const std::int64_t norm_budget = 2 * static_cast<std::int64_t>(bound);
  if (genus == 1) {
    // One column: the coefficients are the norm counts, streamed without a table.
    const auto histogram = norm_histogram(lattice, norm_budget);
    std::vector<std::int32_t> keys;
    std::vector<Coefficient> coeffs;
    for (std::size_t n = 0; n < histogram.size(); ++n)
      if (histogram[n] != 0) {
        keys.push_back(narrow_entry(static_cast<std::int64_t>(n)));
        coeffs.push_back(static_cast<Coefficient>(histogram[n]));
      }
    return SiegelExpansion(TrustedTerms{}, 1, weight, bound,
                           CoefficientTable::from_sorted(1, std::move(keys), std::move(coeffs)));
  }
  const int max_len = std::min(genus, bound);
  const VectorTable table = sign_reduced_table(lattice, norm_budget);
  const GramPacker packer(max_len, std::max<std::int64_t>(norm_budget, 1));
  const auto counts = count_orbits(table, packer, max_len, norm_budget, nullptr, options);

  TermAccumulator acc(triangle_size(genus));
  spread_orbits(counts, packer, genus, nullptr, acc);
  return SiegelExpansion(TrustedTerms{}, genus, weight, bound, acc.finish());
}

std::vector<std::pair<HalfIntegralMatrix, Coefficient>> siegel_theta_with_diagonal(
    const EvenLattice& lattice, std::span<const std::int64_t> doubled_diagonal, const EnumerationOptions& options) {
  const int genus = static_cast<int>(doubled_diagonal.size());
  std::vector<std::int64_t> diagonal(doubled_diagonal.begin(), doubled_diagonal.end());
  std::vector<std::int64_t> required;
  for (std::int64_t n : diagonal) {
    if (n < 0 || n % 2 != 0) throw DomainError("doubled diagonal entries must be even and nonnegative");
    if (n > 0) required.push_back(n);
  }
  std::sort(required.begin(), required.end());

  const std::int64_t max_norm = required.empty() ? 0 : required.back();
  const int len = static_cast<int>(required.size());
  const VectorTable table = sign_reduced_table(lattice, max_norm);
  const GramPacker packer(len, std::max<std::int64_t>(max_norm, 1));
  const std::int64_t total = std::accumulate(required.begin(), required.end(), std::int64_t{0});
  const auto counts = count_orbits(table, packer, len, total, &required, options);

  TermAccumulator acc(triangle_size(genus));
  spread_orbits(counts, packer, genus, &diagonal, acc);
  const CoefficientTable terms = acc.finish();
  std::vector<std::pair<HalfIntegralMatrix, Coefficient>> result;
  result.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i)
    result.emplace_back(HalfIntegralMatrix(doubled_from_key(terms.key(i), genus)), terms.coefficient(i));
  return result;
}

JacobiExpansion jacobi_theta(const JacobiIndex& index, int genus, int bound, const EnumerationOptions& options) {
  if (genus < 0) throw DomainError("genus must be nonnegative");
  if (bound < 0) throw DomainError("trace bound must be nonnegative");
  const int h = index.width();
  if (h % 2 != 0) throw DomainError("weight tag h/2 of the Jacobi theta series must be an integer");
  if (!index.positive_definite()) throw DomainError("Jacobi theta series needs a positive definite 2M");
  const EvenLattice lattice(index.doubled());
  const VectorTable table = signed_table(lattice, 2 * static_cast<std::int64_t>(bound));

  const std::size_t tri = triangle_size(genus);
  const std::size_t stride = tri + static_cast<std::size_t>(genus) * static_cast<std::size_t>(h);
  std::vector<std::int32_t> keys;
  std::atomic<std::uint64_t> used{0};
  BudgetMeter meter(used, options.node_budget);
  std::vector<std::size_t> chosen(static_cast<std::size_t>(genus));
  IndexKey key(stride);

  // Each column lambda_p contributes (2T)_pq = lambda_p . 2M lambda_q and the
  // R row (2M lambda_p)^T, which is exactly the stored image.
  auto walk = [&](auto&& self, int p, std::int64_t remaining) -> void {
    if (p == genus) {
      keys.insert(keys.end(), key.begin(), key.end());
      return;
    }
    for (std::size_t j = 0; j < table.size() && table.norms[j] <= remaining; ++j) {
      meter.tick();
      chosen[static_cast<std::size_t>(p)] = j;
      key[triangle_position(p, p)] = narrow_entry(table.norms[j]);
      for (int q = 0; q < p; ++q) key[triangle_position(p, q)] = narrow_entry(table.inner(j, chosen[static_cast<std::size_t>(q)]));
      const std::int64_t* image = table.image(j);
      for (int c = 0; c < h; ++c) key[tri + static_cast<std::size_t>(p * h + c)] = narrow_entry(image[c]);
      self(self, p + 1, remaining - table.norms[j]);
    }
  };
  walk(walk, 0, 2 * static_cast<std::int64_t>(bound));

  const std::size_t n = stride == 0 ? 1 : keys.size() / stride;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto view = [&](std::size_t i) { return KeyView(keys.data() + i * stride, stride); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return canonical_less(view(a), view(b)); });
  std::vector<std::int32_t> sorted;
  sorted.reserve(keys.size());
  for (std::size_t i : order) sorted.insert(sorted.end(), view(i).begin(), view(i).end());
  // from_sorted rejects repeated keys, which would contradict lambda <-> R injectivity.
  CoefficientTable terms = CoefficientTable::from_sorted(stride, std::move(sorted), std::vector<Coefficient>(n, 1));
  return JacobiExpansion(TrustedTerms{}, genus, index, h / 2, bound, std::move(terms));
}

JacobiExpansion theta_sc(const EvenLattice& s, const IntMatrix& c, int genus, int bound,
                         const EnumerationOptions& options) {
  if (genus < 0) throw DomainError("genus must be nonnegative");
  if (bound < 0) throw DomainError("trace bound must be nonnegative");
  if (!is_even_unimodular(s)) throw DomainError("theta_sc needs an even unimodular S");
  if (c.rows() != s.rank()) throw ShapeError("c must have rank(S) rows");
  const int h = static_cast<int>(c.cols());
  const JacobiIndex index(IntMatrix(c.transpose() * s.gram() * c));
  const VectorTable table = signed_table(s, 2 * static_cast<std::int64_t>(bound));

  // R row of lambda_p is (S lambda_p)^T c.
  std::vector<std::int64_t> r_rows(table.size() * static_cast<std::size_t>(h));
  for (std::size_t j = 0; j < table.size(); ++j) {
    const Eigen::Map<const IntVector> image(table.image(j), s.rank());
    const IntVector row = c.transpose() * image;
    for (int k = 0; k < h; ++k) r_rows[j * static_cast<std::size_t>(h) + static_cast<std::size_t>(k)] = row(k);
  }

  const std::size_t tri = triangle_size(genus);
  TermAccumulator acc(tri + static_cast<std::size_t>(genus) * static_cast<std::size_t>(h));
  std::atomic<std::uint64_t> used{0};
  BudgetMeter meter(used, options.node_budget);
  std::vector<std::size_t> chosen(static_cast<std::size_t>(genus));
  IndexKey key(tri + static_cast<std::size_t>(genus) * static_cast<std::size_t>(h));

  auto walk = [&](auto&& self, int p, std::int64_t remaining) -> void {
    if (p == genus) {
      acc.add(key, 1);
      return;
    }
    for (std::size_t j = 0; j < table.size() && table.norms[j] <= remaining; ++j) {
      meter.tick();
      chosen[static_cast<std::size_t>(p)] = j;
      key[triangle_position(p, p)] = narrow_entry(table.norms[j]);
      for (int q = 0; q < p; ++q) key[triangle_position(p, q)] = narrow_entry(table.inner(j, chosen[static_cast<std::size_t>(q)]));
      for (int k = 0; k < h; ++k)
        key[tri + static_cast<std::size_t>(p * h + k)] = narrow_entry(r_rows[j * static_cast<std::size_t>(h) + static_cast<std::size_t>(k)]);
      self(self, p + 1, remaining - table.norms[j]);
    }
  };
  walk(walk, 0, 2 * static_cast<std::int64_t>(bound));

  return JacobiExpansion(TrustedTerms{}, genus, index, static_cast<int>(s.rank() / 2), bound, acc.finish());
}

}  // namespace stheta
