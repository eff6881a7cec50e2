#include "stheta/serialize.hpp"

#include <json.hpp>

#include <set>

namespace stheta {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ordered_json matrix_json(const IntMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Header keys are written in schema order, then one term per line.
std::string assemble(const ordered_json& header, const std::vector<std::string>& term_lines) {
  std::string out = "{\n";
  for (const auto& [key, value] : header.items()) out += "  " + json(key).dump() + ": " + value.dump() + ",\n";
  out += "  \"terms\": [";
  for (std::size_t i = 0; i < term_lines.size(); ++i) {
    out += i == 0 ? "\n    " : ",\n    ";
    out += term_lines[i];
  }
  out += term_lines.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw FormatError(where + ": " + what);
}

const json& require(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key)) fail(where, std::string("missing key \"") + key + "\"");
  return doc.at(key);
}

int require_int(const json& doc, const char* key, const std::string& where) {
  const json& v = require(doc, key, where);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  const auto value = v.get<std::int64_t>();
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
    fail(where + "." + key, "integer out of range");
  return static_cast<int>(value);
}

IntMatrix parse_matrix(const json& v, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows)
    fail(where, "expected " + std::to_string(rows) + " rows");
  IntMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(where + "[" + std::to_string(i) + "]", "expected " + std::to_string(cols) + " columns");
    for (Eigen::Index j = 0; j < cols; ++j) {
      const json& cell = row[static_cast<std::size_t>(j)];
      if (!cell.is_number_integer()) fail(where, "matrix entries must be integers");
      m(i, j) = cell.get<std::int64_t>();
    }
  }
  return m;
}

void check_keys(const json& doc, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(where, "unknown key \"" + key + "\"");
  }
}

json parse_document(std::string_view document) {
  try {
    return json::parse(document);
  } catch (const json::exception& e) {
    throw FormatError(std::string("document is not valid JSON: ") + e.what());
  }
}

Coefficient parse_coefficient(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "coefficient must be a decimal string");
  try {
    return parse_decimal(v.get<std::string>());
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

// Reads terms, validating each; a null index selects the Siegel layout.
CoefficientTable parse_terms(const json& terms, int genus, int bound, const JacobiIndex* index) {
  if (!terms.is_array()) fail("terms", "expected an array");
  const int h = index ? index->width() : 0;
  const std::size_t stride = triangle_size(genus) + static_cast<std::size_t>(genus) * static_cast<std::size_t>(h);
  TermAccumulator acc(stride);
  std::set<IndexKey> seen;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string where = "terms[" + std::to_string(i) + "]";
    const json& term = terms[i];
    if (index)
      check_keys(term, {"T2", "R", "c"}, where);
    else
      check_keys(term, {"T2", "c"}, where);
    const IntMatrix doubled = parse_matrix(require(term, "T2", where), genus, genus, where + ".T2");
    if (!is_symmetric(doubled)) fail(where + ".T2", "matrix is not symmetric");
    for (Eigen::Index p = 0; p < genus; ++p)
      if (doubled(p, p) % 2 != 0) fail(where + ".T2", "odd diagonal entry");
    const HalfIntegralMatrix t(doubled);
    if (t.trace() > bound) fail(where + ".T2", "trace exceeds the bound " + std::to_string(bound));
    IndexKey key;
    if (index) {
      const IntMatrix r = parse_matrix(require(term, "R", where), genus, h, where + ".R");
      if (!block_psd(t, r, *index)) fail(where, "index violates the block psd condition");
      key = jacobi_key(t, r);
    } else {
      if (!is_psd_half_integral(t)) fail(where + ".T2", "matrix is not positive semidefinite");
      key = siegel_key(t);
    }
    if (!seen.insert(key).second) fail(where, "duplicate index");
    acc.add(key, parse_coefficient(require(term, "c", where), where + ".c"));
  }
  return acc.finish();
}

}  // namespace

std::string serialize(const SiegelExpansion& e) {
  ordered_json header;
  header["kind"] = "siegel";
  header["genus"] = e.genus();
  header["weight"] = e.weight();
  header["bound"] = e.bound();
  std::vector<std::string> lines;
  lines.reserve(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    ordered_json term;
    term["T2"] = matrix_json(doubled_from_key(e.terms().key(i), e.genus()));
    term["c"] = to_decimal(e.terms().coefficient(i));
    lines.push_back(term.dump());
  }
  return assemble(header, lines);
}

std::string serialize(const JacobiExpansion& e) {
  ordered_json header;
  header["kind"] = "jacobi";
  header["genus"] = e.genus();
  header["width"] = e.width();
  header["index_gram_doubled"] = matrix_json(e.index().doubled());
  header["weight"] = e.weight();
  header["bound"] = e.bound();
  std::vector<std::string> lines;
  lines.reserve(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    ordered_json term;
    term["T2"] = matrix_json(e.t_index(i).doubled());
    term["R"] = matrix_json(e.r_index(i));
    term["c"] = to_decimal(e.terms().coefficient(i));
    lines.push_back(term.dump());
  }
  return assemble(header, lines);
}

std::string serialize(const AnyExpansion& e) {
  return std::visit([](const auto& x) { return serialize(x); }, e);
}

AnyExpansion deserialize(std::string_view document) {
  const json doc = parse_document(document);
  if (!doc.is_object()) fail("document", "expected an object");
  const json& kind = require(doc, "kind", "document");
  if (!kind.is_string()) fail("kind", "expected a string");
  const int genus = require_int(doc, "genus", "document");
  const int weight = require_int(doc, "weight", "document");
  const int bound = require_int(doc, "bound", "document");
  if (genus < 0) fail("genus", "must be nonnegative");
  if (bound < 0) fail("bound", "must be nonnegative");
  try {
    if (kind == "siegel") {
      check_keys(doc, {"kind", "genus", "weight", "bound", "terms"}, "document");
      CoefficientTable terms = parse_terms(require(doc, "terms", "document"), genus, bound, nullptr);
      return SiegelExpansion(TrustedTerms{}, genus, weight, bound, std::move(terms));
    }
    if (kind == "jacobi") {
      check_keys(doc, {"kind", "genus", "width", "index_gram_doubled", "weight", "bound", "terms"}, "document");
      const int width = require_int(doc, "width", "document");
      if (width < 0) fail("width", "must be nonnegative");
      IntMatrix doubled = parse_matrix(require(doc, "index_gram_doubled", "document"), width, width, "index_gram_doubled");
      std::optional<JacobiIndex> index;
      try {
        index.emplace(std::move(doubled));
      } catch (const DomainError& e) {
        fail("index_gram_doubled", e.what());
      }
      CoefficientTable terms = parse_terms(require(doc, "terms", "document"), genus, bound, &*index);
      return JacobiExpansion(TrustedTerms{}, genus, *index, weight, bound, std::move(terms));
    }
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("document: ") + e.what());
  }
  fail("kind", "expected \"siegel\" or \"jacobi\"");
}

SiegelExpansion deserialize_siegel(std::string_view document) {
  AnyExpansion any = deserialize(document);
  if (auto* e = std::get_if<SiegelExpansion>(&any)) return std::move(*e);
  throw FormatError("kind: expected a Siegel expansion");
}

JacobiExpansion deserialize_jacobi(std::string_view document) {
  AnyExpansion any = deserialize(document);
  if (auto* e = std::get_if<JacobiExpansion>(&any)) return std::move(*e);
  throw FormatError("kind: expected a Jacobi expansion");
}

}  // namespace stheta
