#include "stheta/lattice.hpp"

#include "stheta/enumerate.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace stheta {

EvenLattice::EvenLattice(IntMatrix gram, std::string name) : gram_(std::move(gram)), name_(std::move(name)) {
  if (gram_.rows() == 0) throw CatalogError("lattice '" + name_ + "' has rank 0");
  if (!is_symmetric(gram_)) throw CatalogError("Gram matrix of '" + name_ + "' is not symmetric");
  for (Eigen::Index i = 0; i < gram_.rows(); ++i)
    if (gram_(i, i) % 2 != 0) throw CatalogError("Gram matrix of '" + name_ + "' has an odd diagonal entry");
  if (!is_positive_definite(gram_)) throw CatalogError("Gram matrix of '" + name_ + "' is not positive definite");
}

Coefficient EvenLattice::determinant() const { return exact_determinant(gram_); }

EvenLattice direct_sum(const EvenLattice& a, const EvenLattice& b) {
  IntMatrix gram = IntMatrix::Zero(a.rank() + b.rank(), a.rank() + b.rank());
  gram.topLeftCorner(a.rank(), a.rank()) = a.gram();
  gram.bottomRightCorner(b.rank(), b.rank()) = b.gram();
  std::string name;
  if (!a.name().empty() && !b.name().empty()) name = a.name() + "+" + b.name();
  return EvenLattice(std::move(gram), std::move(name));
}

bool is_even_unimodular(const EvenLattice& lattice) {
  // Evenness and definiteness are constructor invariants; only det remains.
  return lattice.determinant() == 1;
}

EvenLattice dn_plus_lattice(int n, std::string name) {
  if (n <= 0 || n % 8 != 0) throw CatalogError("D_n^+ is even unimodular only for n divisible by 8");
  // Basis vectors in doubled coordinates (2x), so everything stays integral.
  IntMatrix basis = IntMatrix::Zero(n, n);
  basis.col(0).setConstant(-1);
  basis(0, 0) = 1;
  basis(n - 1, 0) = 1;
  basis(0, 1) = 2;
  basis(1, 1) = 2;
  for (int i = 2; i < n; ++i) {
    basis(i - 1, i) = 2;
    basis(i - 2, i) = -2;
  }
  IntMatrix gram = basis.transpose() * basis;
  for (Eigen::Index i = 0; i < gram.size(); ++i) gram.data()[i] /= 4;
  if (name.empty()) name = "D" + std::to_string(n) + "plus";
  return EvenLattice(std::move(gram), std::move(name));
}

ShortVectors short_vectors(const EvenLattice& lattice, std::int64_t bound) {
  if (bound < 0) throw DomainError("short-vector bound must be nonnegative");
  if (bound % 2 != 0) throw DomainError("short-vector bound must be even for an even lattice");
  ShortVectors result;
  result.bound = bound;
  if (bound == 0) return result;

  const Eigen::Index m = lattice.rank();
  std::vector<std::pair<std::int64_t, IntVector>> found;
  detail::EllipsoidWalker walker(lattice.gram(), bound);
  walker.run([&](const std::int64_t* x, std::int64_t norm) {
    if (norm == 0) return;
    Eigen::Index first = 0;
    while (x[first] == 0) ++first;
    if (x[first] < 0) return;
    found.emplace_back(norm, Eigen::Map<const IntVector>(x, m));
  });
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return std::lexicographical_compare(a.second.begin(), a.second.end(), b.second.begin(), b.second.end());
  });
  result.vectors.reserve(found.size());
  result.norms.reserve(found.size());
  for (auto& [norm, v] : found) {
    result.norms.push_back(norm);
    result.vectors.push_back(std::move(v));
  }
  return result;
}

std::vector<std::uint64_t> norm_histogram(const EvenLattice& lattice, std::int64_t bound) {
  if (bound < 0) throw DomainError("histogram bound must be nonnegative");
  std::vector<std::uint64_t> counts;
  detail::EllipsoidWalker walker(lattice.gram(), bound);
  walker.count(counts);
  return counts;
}

std::int64_t min_norm(const EvenLattice& lattice) {
  // The first basis vector bounds the search.
  const std::int64_t ceiling = lattice.gram()(0, 0);
  for (std::int64_t bound = 2;; bound = std::min(2 * bound, ceiling)) {
    const auto counts = norm_histogram(lattice, bound);
    for (std::size_t n = 1; n < counts.size(); ++n)
      if (counts[n] != 0) return static_cast<std::int64_t>(n);
    if (bound == ceiling) break;
  }
  throw DomainError("no nonzero vector found below the first basis norm");
}

NormProfile count_vectors_by_norm(const EvenLattice& lattice, std::int64_t bound) {
  if (bound < 0) throw DomainError("norm profile bound must be nonnegative");
  NormProfile profile;
  profile.bound = bound;
  const auto counts = norm_histogram(lattice, bound);
  for (std::size_t n = 1; n < counts.size(); ++n)
    if (counts[n] != 0) profile.counts[static_cast<std::int64_t>(n)] = static_cast<Coefficient>(counts[n]);
  return profile;
}

// ---------------------------------------------------------------------------

LatticeCatalog LatticeCatalog::builtin() {
  LatticeCatalog catalog;
  catalog.add(dn_plus_lattice(8, "E8"));
  catalog.add(dn_plus_lattice(16, "D16plus"));
  return catalog;
}

void LatticeCatalog::add(const EvenLattice& lattice, bool allow_non_unimodular) {
  const std::string& name = lattice.name();
  if (name.empty()) throw CatalogError("catalog entries need a name");
  if (name.find_first_of("+ \t") != std::string::npos)
    throw CatalogError("catalog name '" + name + "' may not contain '+' or whitespace");
  if (!allow_non_unimodular && !is_even_unimodular(lattice))
    throw CatalogError("lattice '" + name + "' is not unimodular (set allow_non_unimodular to register it)");
  entries_.insert_or_assign(name, lattice);
}

void LatticeCatalog::load_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CatalogError(std::string("catalog file is not valid JSON: ") + e.what());
  }
  auto load_one = [&](const nlohmann::json& entry) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("gram"))
      throw CatalogError("catalog entry needs \"name\" and \"gram\"");
    for (const auto& [key, value] : entry.items())
      if (key != "name" && key != "gram" && key != "allow_non_unimodular")
        throw CatalogError("unknown catalog key '" + key + "'");
    const auto& rows = entry.at("gram");
    if (!rows.is_array() || rows.empty()) throw CatalogError("\"gram\" must be a nonempty array of rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    IntMatrix gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw CatalogError("\"gram\" must be square");
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto& cell = row[static_cast<std::size_t>(j)];
        if (!cell.is_number_integer()) throw CatalogError("\"gram\" entries must be integers");
        gram(i, j) = cell.get<std::int64_t>();
      }
    }
    const bool allow = entry.value("allow_non_unimodular", false);
    add(EvenLattice(std::move(gram), entry.at("name").get<std::string>()), allow);
  };
  if (doc.is_array()) {
    for (const auto& entry : doc) load_one(entry);
  } else {
    load_one(doc);
  }
}

void LatticeCatalog::load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open catalog file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  load_json_text(buffer.str());
}

EvenLattice LatticeCatalog::lookup(std::string_view expression) const {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t plus = expression.find('+', start);
    parts.push_back(expression.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  std::vector<EvenLattice> summands;
  for (std::string_view part : parts) {
    auto it = entries_.find(part);
    if (it == entries_.end()) throw CatalogError("unknown lattice '" + std::string(part) + "'");
    summands.push_back(it->second);
  }
  EvenLattice result = summands.front();
  for (std::size_t i = 1; i < summands.size(); ++i) result = direct_sum(result, summands[i]);
  return EvenLattice(result.gram(), std::string(expression));
}

std::vector<std::string> LatticeCatalog::names() const {
  std::vector<std::string> out;
  for (const auto& [name, lattice] : entries_) out.push_back(name);
  return out;
}

EvenLattice catalog_lattice(std::string_view expression) {
  static const LatticeCatalog catalog = LatticeCatalog::builtin();
  return catalog.lookup(expression);
}

}  // namespace stheta
