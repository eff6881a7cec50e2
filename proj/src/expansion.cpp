#include "stheta/expansion.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace stheta {

HalfIntegralMatrix::HalfIntegralMatrix(IntMatrix doubled) : doubled_(std::move(doubled)) {
  if (!is_symmetric(doubled_)) throw DomainError("half-integral matrix must be symmetric");
  for (Eigen::Index i = 0; i < doubled_.rows(); ++i)
    if (doubled_(i, i) % 2 != 0) throw DomainError("doubled half-integral matrix has an odd diagonal entry");
}

JacobiIndex::JacobiIndex(IntMatrix doubled) : doubled_(std::move(doubled)) {
  if (!is_symmetric(doubled_)) throw DomainError("Jacobi index must be symmetric");
  for (Eigen::Index i = 0; i < doubled_.rows(); ++i)
    if (doubled_(i, i) % 2 != 0) throw DomainError("doubled Jacobi index has an odd diagonal entry");
  if (!is_positive_semidefinite(doubled_)) throw DomainError("Jacobi index must be positive semidefinite");
}

bool is_psd_half_integral(const HalfIntegralMatrix& t) { return is_positive_semidefinite(t.doubled()); }

IntMatrix doubled_block(const HalfIntegralMatrix& t, const IntMatrix& r, const JacobiIndex& index) {
  const int g = t.genus();
  const int h = index.width();
  if (r.rows() != g || r.cols() != h) throw ShapeError("R must be g x h");
  IntMatrix block(g + h, g + h);
  block.topLeftCorner(g, g) = t.doubled();
  block.topRightCorner(g, h) = r;
  block.bottomLeftCorner(h, g) = r.transpose();
  block.bottomRightCorner(h, h) = index.doubled();
  return block;
}

bool block_psd(const HalfIntegralMatrix& t, const IntMatrix& r, const JacobiIndex& index) {
  return is_positive_semidefinite(doubled_block(t, r, index));
}

// ---------------------------------------------------------------------------

void write_doubled(const IntMatrix& doubled, std::int32_t* out) {
  for (Eigen::Index i = 0; i < doubled.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) *out++ = narrow_entry(doubled(i, j));
}

IndexKey siegel_key(const HalfIntegralMatrix& t) {
  IndexKey key(triangle_size(t.genus()));
  write_doubled(t.doubled(), key.data());
  return key;
}

IndexKey jacobi_key(const HalfIntegralMatrix& t, const IntMatrix& r) {
  if (r.rows() != t.genus()) throw ShapeError("R must have g rows");
  IndexKey key = siegel_key(t);
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) key.push_back(narrow_entry(r(i, j)));
  return key;
}

IntMatrix doubled_from_key(KeyView key, int genus) {
  IntMatrix d(genus, genus);
  std::size_t pos = 0;
  for (int i = 0; i < genus; ++i)
    for (int j = 0; j <= i; ++j) d(i, j) = d(j, i) = key[pos++];
  return d;
}

IntMatrix r_from_key(KeyView key, int genus, int width) {
  IntMatrix r(genus, width);
  std::size_t pos = triangle_size(genus);
  for (int i = 0; i < genus; ++i)
    for (int j = 0; j < width; ++j) r(i, j) = key[pos++];
  return r;
}

std::int64_t key_trace(KeyView key, int genus) {
  std::int64_t doubled = 0;
  for (int i = 0; i < genus; ++i) doubled += key[triangle_position(i, i)];
  return doubled / 2;
}

namespace {

// Scalar order behind canonical_key: '+' sorts before '-', magnitudes ascend.
bool scalar_less(std::int32_t a, std::int32_t b) {
  const bool na = a < 0;
  const bool nb = b < 0;
  if (na != nb) return nb;
  return na ? a > b : a < b;
}

void append_entry(std::string& out, std::int64_t v) {
  char buffer[24];
  const unsigned long long magnitude = v < 0 ? 0ULL - static_cast<unsigned long long>(v) : static_cast<unsigned long long>(v);
  std::snprintf(buffer, sizeof buffer, "%c%010llu", v < 0 ? '-' : '+', magnitude);
  out += buffer;
}

}  // namespace

bool canonical_less(KeyView a, KeyView b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == b[i]) continue;
    return scalar_less(a[i], b[i]);
  }
  return a.size() < b.size();
}

std::string canonical_key(KeyView key, int genus) {
  std::string out;
  const std::size_t tri = triangle_size(genus);
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i > 0) out += (i == tri) ? ';' : ',';
    append_entry(out, key[i]);
  }
  return out;
}

std::string canonical_key(const HalfIntegralMatrix& t, const std::optional<IntMatrix>& r) {
  if (r) {
    std::string out = canonical_key(siegel_key(t), t.genus());
    if (r->size() > 0) {
      out += ';';
      for (Eigen::Index i = 0; i < r->rows(); ++i)
        for (Eigen::Index j = 0; j < r->cols(); ++j) {
          if (i > 0 || j > 0) out += ',';
          append_entry(out, (*r)(i, j));
        }
    }
    return out;
  }
  return canonical_key(siegel_key(t), t.genus());
}

// ---------------------------------------------------------------------------

CoefficientTable CoefficientTable::from_sorted(std::size_t stride, std::vector<std::int32_t> keys,
                                               std::vector<Coefficient> coeffs) {
  CoefficientTable table(stride);
  if (keys.size() != stride * coeffs.size()) throw ShapeError("key storage does not match coefficient count");
  table.keys_ = std::move(keys);
  table.coeffs_ = std::move(coeffs);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.coeffs_[i] == 0) throw DomainError("coefficient table holds an explicit zero");
    if (i > 0 && !canonical_less(table.key(i - 1), table.key(i)))
      throw DomainError("coefficient table keys are not strictly increasing");
  }
  return table;
}

Coefficient CoefficientTable::find(KeyView key) const {
  if (key.size() != stride_) throw ShapeError("key length does not match table stride");
  std::size_t lo = 0;
  std::size_t hi = size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (canonical_less(this->key(mid), key))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < size() && std::equal(key.begin(), key.end(), this->key(lo).begin())) return coeffs_[lo];
  return 0;
}

void TermAccumulator::add(KeyView key, Coefficient c) {
  if (key.size() != stride_) throw ShapeError("key length does not match accumulator stride");
  if (c == 0) return;
  auto [it, inserted] = map_.try_emplace(BuildKey(key.begin(), key.end()), c);
  if (!inserted) it->second = checked_add(it->second, c);
}

void TermAccumulator::merge(const TermAccumulator& other) {
  if (other.stride_ != stride_) throw ShapeError("merging accumulators of different strides");
  for (const auto& [key, c] : other.map_) add(KeyView(key.data(), key.size()), c);
}

CoefficientTable TermAccumulator::finish() const {
  std::vector<const std::pair<const BuildKey, Coefficient>*> live;
  live.reserve(map_.size());
  for (const auto& entry : map_)
    if (entry.second != 0) live.push_back(&entry);
  std::sort(live.begin(), live.end(), [](const auto* a, const auto* b) {
    return canonical_less(KeyView(a->first.data(), a->first.size()), KeyView(b->first.data(), b->first.size()));
  });
  std::vector<std::int32_t> keys;
  std::vector<Coefficient> coeffs;
  keys.reserve(live.size() * stride_);
  coeffs.reserve(live.size());
  for (const auto* entry : live) {
    keys.insert(keys.end(), entry->first.begin(), entry->first.end());
    coeffs.push_back(entry->second);
  }
  return CoefficientTable::from_sorted(stride_, std::move(keys), std::move(coeffs));
}

// ---------------------------------------------------------------------------

SiegelExpansion::SiegelExpansion(TrustedTerms, int genus, int weight, int bound, CoefficientTable terms)
    : genus_(genus), weight_(weight), bound_(bound), terms_(std::move(terms)) {
  check_shape();
}

SiegelExpansion::SiegelExpansion(int genus, int weight, int bound, CoefficientTable terms)
    : SiegelExpansion(TrustedTerms{}, genus, weight, bound, std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (!is_psd_half_integral(index(i)))
      throw DomainError("Siegel index " + canonical_key(terms_.key(i), genus_) + " is not positive semidefinite");
}

void SiegelExpansion::check_shape() const {
  if (genus_ < 0) throw ShapeError("genus must be nonnegative");
  if (bound_ < 0) throw ShapeError("trace bound must be nonnegative");
  if (terms_.stride() != triangle_size(genus_)) throw ShapeError("Siegel key length does not match genus");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const KeyView key = terms_.key(i);
    for (int p = 0; p < genus_; ++p)
      if (key[triangle_position(p, p)] % 2 != 0)
        throw DomainError("Siegel index " + canonical_key(key, genus_) + " has an odd diagonal entry");
    if (key_trace(key, genus_) > bound_)
      throw DomainError("Siegel index " + canonical_key(key, genus_) + " exceeds the trace bound");
  }
}

SiegelExpansion SiegelExpansion::zero(int genus, int weight, int bound) {
  return SiegelExpansion(TrustedTerms{}, genus, weight, bound, CoefficientTable(triangle_size(genus)));
}

SiegelExpansion SiegelExpansion::constant(int genus, int weight, int bound, Coefficient c) {
  TermAccumulator acc(triangle_size(genus));
  const IndexKey zero_key(triangle_size(genus), 0);
  acc.add(zero_key, c);
  return SiegelExpansion(TrustedTerms{}, genus, weight, bound, acc.finish());
}

Coefficient SiegelExpansion::coefficient(const HalfIntegralMatrix& t) const {
  if (t.genus() != genus_) throw ShapeError("index genus does not match expansion genus");
  return terms_.find(siegel_key(t));
}

JacobiExpansion::JacobiExpansion(TrustedTerms, int genus, JacobiIndex index, int weight, int bound,
                                 CoefficientTable terms)
    : genus_(genus), index_(std::move(index)), weight_(weight), bound_(bound), terms_(std::move(terms)) {
  check_shape();
}

JacobiExpansion::JacobiExpansion(int genus, JacobiIndex index, int weight, int bound, CoefficientTable terms)
    : JacobiExpansion(TrustedTerms{}, genus, std::move(index), weight, bound, std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (!block_psd(t_index(i), r_index(i), index_))
      throw DomainError("Jacobi index " + canonical_key(terms_.key(i), genus_) + " violates the block psd condition");
}

void JacobiExpansion::check_shape() const {
  if (genus_ < 0) throw ShapeError("genus must be nonnegative");
  if (bound_ < 0) throw ShapeError("trace bound must be nonnegative");
  const std::size_t stride = triangle_size(genus_) + static_cast<std::size_t>(genus_) * static_cast<std::size_t>(width());
  if (terms_.stride() != stride) throw ShapeError("Jacobi key length does not match genus and width");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const KeyView key = terms_.key(i);
    for (int p = 0; p < genus_; ++p)
      if (key[triangle_position(p, p)] % 2 != 0)
        throw DomainError("Jacobi index " + canonical_key(key, genus_) + " has an odd diagonal entry");
    if (key_trace(key, genus_) > bound_)
      throw DomainError("Jacobi index " + canonical_key(key, genus_) + " exceeds the trace bound");
  }
}

JacobiExpansion JacobiExpansion::zero(int genus, JacobiIndex index, int weight, int bound) {
  const std::size_t stride = triangle_size(genus) + static_cast<std::size_t>(genus) * static_cast<std::size_t>(index.width());
  return JacobiExpansion(TrustedTerms{}, genus, std::move(index), weight, bound, CoefficientTable(stride));
}

Coefficient JacobiExpansion::coefficient(const HalfIntegralMatrix& t, const IntMatrix& r) const {
  if (t.genus() != genus_ || r.rows() != genus_ || r.cols() != width())
    throw ShapeError("index shape does not match expansion");
  return terms_.find(jacobi_key(t, r));
}

// ---------------------------------------------------------------------------

namespace {

template <typename Expansion>
void check_combinable(std::span<const Coefficient> coeffs, std::span<const Expansion> expansions) {
  if (expansions.empty()) throw ShapeError("linear_combine needs at least one operand");
  if (coeffs.size() != expansions.size()) throw ShapeError("linear_combine: coefficient count mismatch");
  const Expansion& first = expansions.front();
  for (const Expansion& e : expansions) {
    if (e.genus() != first.genus()) throw ShapeError("linear_combine: genus mismatch");
    if (e.weight() != first.weight()) throw ShapeError("linear_combine: weight mismatch");
    if constexpr (std::is_same_v<Expansion, JacobiExpansion>) {
      if (!(e.index() == first.index())) throw ShapeError("linear_combine: Jacobi index mismatch");
    }
  }
}

template <typename Expansion>
CoefficientTable combine_terms(std::span<const Coefficient> coeffs, std::span<const Expansion> expansions, int bound) {
  const int g = expansions.front().genus();
  TermAccumulator acc(expansions.front().terms().stride());
  for (std::size_t e = 0; e < expansions.size(); ++e) {
    const CoefficientTable& terms = expansions[e].terms();
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (key_trace(terms.key(i), g) <= bound) acc.add(terms.key(i), checked_mul(coeffs[e], terms.coefficient(i)));
  }
  return acc.finish();
}

template <typename Expansion>
int min_bound(std::span<const Expansion> expansions) {
  int bound = expansions.front().bound();
  for (const Expansion& e : expansions) bound = std::min(bound, e.bound());
  return bound;
}

CoefficientTable truncate_terms(const CoefficientTable& terms, int genus, int bound) {
  std::vector<std::int32_t> keys;
  std::vector<Coefficient> coeffs;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (key_trace(terms.key(i), genus) > bound) continue;
    keys.insert(keys.end(), terms.key(i).begin(), terms.key(i).end());
    coeffs.push_back(terms.coefficient(i));
  }
  return CoefficientTable::from_sorted(terms.stride(), std::move(keys), std::move(coeffs));
}

}  // namespace

SiegelExpansion linear_combine(std::span<const Coefficient> coeffs, std::span<const SiegelExpansion> expansions) {
  check_combinable(coeffs, expansions);
  const int bound = min_bound(expansions);
  const SiegelExpansion& first = expansions.front();
  return SiegelExpansion(TrustedTerms{}, first.genus(), first.weight(), bound, combine_terms(coeffs, expansions, bound));
}

JacobiExpansion linear_combine(std::span<const Coefficient> coeffs, std::span<const JacobiExpansion> expansions) {
  check_combinable(coeffs, expansions);
  const int bound = min_bound(expansions);
  const JacobiExpansion& first = expansions.front();
  return JacobiExpansion(TrustedTerms{}, first.genus(), first.index(), first.weight(), bound,
                         combine_terms(coeffs, expansions, bound));
}

SiegelExpansion truncate(const SiegelExpansion& e, int bound) {
  if (bound > e.bound()) throw DomainError("truncation cannot raise the trace bound");
  return SiegelExpansion(TrustedTerms{}, e.genus(), e.weight(), bound, truncate_terms(e.terms(), e.genus(), bound));
}

JacobiExpansion truncate(const JacobiExpansion& e, int bound) {
  if (bound > e.bound()) throw DomainError("truncation cannot raise the trace bound");
  return JacobiExpansion(TrustedTerms{}, e.genus(), e.index(), e.weight(), bound,
                         truncate_terms(e.terms(), e.genus(), bound));
}

SingularReport singular_support_check(const JacobiExpansion& f) {
  SingularReport report;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (exact_determinant(doubled_block(f.t_index(i), f.r_index(i), f.index())) != 0) {
      report.all_singular = false;
      const KeyView key = f.terms().key(i);
      report.witness = IndexKey(key.begin(), key.end());
      return report;
    }
  }
  return report;
}

}  // namespace stheta
