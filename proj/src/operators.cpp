#include "stheta/operators.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>

namespace stheta {

namespace {

bool all_zero(KeyView key, std::size_t first, std::size_t last) {
  for (std::size_t i = first; i < last; ++i)
    if (key[i] != 0) return false;
  return true;
}

}  // namespace

SiegelExpansion siegel_phi(const SiegelExpansion& e) {
  const int g = e.genus();
  if (g < 1) throw DomainError("Phi needs genus >= 1");
  const std::size_t keep = triangle_size(g - 1);
  const std::size_t stride = triangle_size(g);
  std::vector<std::int32_t> keys;
  std::vector<Coefficient> coeffs;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const KeyView key = e.terms().key(i);
    if (!all_zero(key, keep, stride)) continue;
    keys.insert(keys.end(), key.begin(), key.begin() + static_cast<std::ptrdiff_t>(keep));
    coeffs.push_back(e.terms().coefficient(i));
  }
  // Restriction to a zero suffix preserves the key order.
  return SiegelExpansion(TrustedTerms{}, g - 1, e.weight(), e.bound(),
                         CoefficientTable::from_sorted(keep, std::move(keys), std::move(coeffs)));
}

JacobiExpansion siegel_jacobi_psi(const JacobiExpansion& f) {
  const int g = f.genus();
  if (g < 1) throw DomainError("Psi needs genus >= 1");
  const std::size_t h = static_cast<std::size_t>(f.width());
  const std::size_t tri_low = triangle_size(g - 1);
  const std::size_t tri = triangle_size(g);
  const std::size_t r_low = static_cast<std::size_t>(g - 1) * h;
  std::vector<std::int32_t> keys;
  std::vector<Coefficient> coeffs;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const KeyView key = f.terms().key(i);
    if (!all_zero(key, tri_low, tri) || !all_zero(key, tri + r_low, tri + r_low + h)) continue;
    keys.insert(keys.end(), key.begin(), key.begin() + static_cast<std::ptrdiff_t>(tri_low));
    keys.insert(keys.end(), key.begin() + static_cast<std::ptrdiff_t>(tri),
                key.begin() + static_cast<std::ptrdiff_t>(tri + r_low));
    coeffs.push_back(f.terms().coefficient(i));
  }
  return JacobiExpansion(TrustedTerms{}, g - 1, f.index(), f.weight(), f.bound(),
                         CoefficientTable::from_sorted(tri_low + r_low, std::move(keys), std::move(coeffs)));
}

JacobiExpansion shimura_product(const SiegelExpansion& f, const JacobiExpansion& F) {
  const int g = f.genus();
  if (F.genus() != g) throw ShapeError("shimura_product: genus mismatch");
  const int bound = std::min(f.bound(), F.bound());
  const std::size_t tri = triangle_size(g);
  const std::size_t stride = F.terms().stride();

  // Second factor ordered by trace so the inner loop stops at the budget.
  std::vector<std::int64_t> traces(F.size());
  for (std::size_t j = 0; j < F.size(); ++j) traces[j] = key_trace(F.terms().key(j), g);
  std::vector<std::size_t> order(F.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return traces[a] < traces[b]; });

  TermAccumulator acc(stride);
  IndexKey key(stride);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const KeyView left = f.terms().key(i);
    const std::int64_t room = bound - key_trace(left, g);
    if (room < 0) continue;
    const Coefficient a = f.terms().coefficient(i);
    for (std::size_t j : order) {
      if (traces[j] > room) break;
      const KeyView right = F.terms().key(j);
      for (std::size_t p = 0; p < tri; ++p) key[p] = narrow_entry(std::int64_t{left[p]} + right[p]);
      std::copy(right.begin() + static_cast<std::ptrdiff_t>(tri), right.end(), key.begin() + static_cast<std::ptrdiff_t>(tri));
      acc.add(key, checked_mul(a, F.terms().coefficient(j)));
    }
  }
  return JacobiExpansion(TrustedTerms{}, g, F.index(), f.weight() + F.weight(), bound, acc.finish());
}

// ---------------------------------------------------------------------------

namespace {

/// First key (in canonical order) where the two tables differ, both read up
/// to trace `bound`.
std::optional<IndexKey> first_difference(const CoefficientTable& a, const CoefficientTable& b, int genus, int bound) {
  std::size_t i = 0;
  std::size_t j = 0;
  auto skip = [&](const CoefficientTable& t, std::size_t& k) {
    while (k < t.size() && key_trace(t.key(k), genus) > bound) ++k;
  };
  while (true) {
    skip(a, i);
    skip(b, j);
    if (i == a.size() && j == b.size()) return std::nullopt;
    if (j == b.size() || (i < a.size() && canonical_less(a.key(i), b.key(j))))
      return IndexKey(a.key(i).begin(), a.key(i).end());
    if (i == a.size() || canonical_less(b.key(j), a.key(i))) return IndexKey(b.key(j).begin(), b.key(j).end());
    if (a.coefficient(i) != b.coefficient(j)) return IndexKey(a.key(i).begin(), a.key(i).end());
    ++i;
    ++j;
  }
}

template <typename Expansion, typename Op>
StableFamilyReport verify_family(std::span<const Expansion> family, FamilyKind kind, Op op) {
  StableFamilyReport report;
  report.kind = kind;
  if (family.empty()) throw ShapeError("verify_stable needs a nonempty family");
  report.bound = family.front().bound();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Expansion& e = family[i];
    if (e.genus() != family.front().genus() + static_cast<int>(i))
      throw ShapeError("verify_stable: family genera must be consecutive and increasing");
    if (e.weight() != family.front().weight()) throw ShapeError("verify_stable: weight mismatch within the family");
    if constexpr (std::is_same_v<Expansion, JacobiExpansion>) {
      if (!(e.index() == family.front().index())) throw ShapeError("verify_stable: index mismatch within the family");
    }
    report.genera.push_back(e.genus());
    report.bound = std::min(report.bound, e.bound());
  }
  for (std::size_t i = 1; i < family.size(); ++i) {
    const Expansion image = op(family[i]);
    StableStep step;
    step.from = family[i].genus();
    step.to = family[i - 1].genus();
    if (auto key = first_difference(image.terms(), family[i - 1].terms(), step.to, report.bound)) {
      step.pass = false;
      step.witness = canonical_key(*key, step.to);
    }
    report.steps.push_back(std::move(step));
  }
  return report;
}

}  // namespace

bool StableFamilyReport::passed() const {
  return std::all_of(steps.begin(), steps.end(), [](const StableStep& s) { return s.pass; });
}

std::string StableFamilyReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["kind"] = kind == FamilyKind::siegel ? "siegel" : "jacobi";
  doc["genera"] = genera;
  doc["bound"] = bound;
  doc["steps"] = nlohmann::ordered_json::array();
  for (const StableStep& s : steps) {
    nlohmann::ordered_json step;
    step["from"] = s.from;
    step["to"] = s.to;
    step["pass"] = s.pass;
    step["witness"] = s.witness ? nlohmann::ordered_json(*s.witness) : nlohmann::ordered_json(nullptr);
    doc["steps"].push_back(std::move(step));
  }
  return doc.dump(2) + "\n";
}

StableFamilyReport verify_stable(std::span<const SiegelExpansion> family) {
  return verify_family(family, FamilyKind::siegel, [](const SiegelExpansion& e) { return siegel_phi(e); });
}

StableFamilyReport verify_stable(std::span<const JacobiExpansion> family) {
  return verify_family(family, FamilyKind::jacobi, [](const JacobiExpansion& e) { return siegel_jacobi_psi(e); });
}

}  // namespace stheta
