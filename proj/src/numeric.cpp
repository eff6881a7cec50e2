#include "stheta/numeric.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/inlined_vector.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

namespace stheta {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

double to_double(Coefficient c) { return static_cast<double>(static_cast<long double>(c)); }

/// pi i sigma(D tau) for the doubled index stored in a key: e(sigma(T tau)) = exp of this.
Complex siegel_exponent(KeyView key, int genus, const ComplexMatrix& tau) {
  Complex s = 0.0;
  for (int p = 0; p < genus; ++p)
    for (int q = 0; q <= p; ++q) {
      const double d = key[triangle_position(p, q)];
      if (d == 0) continue;
      s += (p == q ? 1.0 : 2.0) * d * tau(p, q);
    }
  return kPi * kI * s;
}

/// 2 pi i sigma(R z) for the R block of a Jacobi key.
Complex jacobi_exponent(KeyView key, int genus, int width, const ComplexMatrix& z) {
  Complex s = 0.0;
  const std::size_t base = triangle_size(genus);
  for (int p = 0; p < genus; ++p)
    for (int c = 0; c < width; ++c) {
      const double r = key[base + static_cast<std::size_t>(p * width + c)];
      if (r != 0) s += r * z(c, p);
    }
  return 2.0 * kPi * kI * s;
}

template <typename Exponent>
EvalResult sum_table(const CoefficientTable& terms, int genus, Exponent exponent) {
  EvalResult result{0.0, 0.0};
  std::int64_t top = -1;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const KeyView key = terms.key(i);
    const Complex term = to_double(terms.coefficient(i)) * std::exp(exponent(key));
    result.value += term;
    const std::int64_t trace = key_trace(key, genus);
    if (trace > top) {
      top = trace;
      result.tail = 0.0;
    }
    if (trace == top) result.tail = std::max(result.tail, std::abs(term));
  }
  return result;
}

// Norm histograms depend only on the lattice, so they are shared across points.
std::vector<std::uint64_t> cached_histogram(const EvenLattice& lattice, std::int64_t bound) {
  static std::mutex mutex;
  static std::map<std::vector<std::int64_t>, std::vector<std::uint64_t>> cache;
  std::vector<std::int64_t> key(lattice.gram().data(), lattice.gram().data() + lattice.gram().size());
  key.push_back(lattice.rank());
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end() && static_cast<std::int64_t>(it->second.size()) > bound)
      return {it->second.begin(), it->second.begin() + bound + 1};
  }
  std::vector<std::uint64_t> histogram = norm_histogram(lattice, bound);
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (slot.size() < histogram.size()) slot = histogram;
  return histogram;
}

struct SignedVectors {
  int rank = 0;
  std::vector<std::int64_t> coords;
  std::vector<std::int64_t> images;
  std::vector<std::int64_t> norms;

  std::int64_t inner(std::size_t i, std::size_t j) const {
    std::int64_t s = 0;
    for (int k = 0; k < rank; ++k)
      s += coords[i * static_cast<std::size_t>(rank) + static_cast<std::size_t>(k)] *
           images[j * static_cast<std::size_t>(rank) + static_cast<std::size_t>(k)];
    return s;
  }
};

/// Zero vector, then both signs of every short vector, sorted by norm.
SignedVectors signed_vectors(const EvenLattice& lattice, std::int64_t bound) {
  SignedVectors out;
  out.rank = static_cast<int>(lattice.rank());
  auto push = [&](const IntVector& v, std::int64_t norm) {
    const IntVector image = lattice.gram() * v;
    out.coords.insert(out.coords.end(), v.data(), v.data() + v.size());
    out.images.insert(out.images.end(), image.data(), image.data() + image.size());
    out.norms.push_back(norm);
  };
  push(IntVector::Zero(lattice.rank()), 0);
  const ShortVectors sv = short_vectors(lattice, bound - bound % 2);
  for (std::size_t i = 0; i < sv.vectors.size(); ++i) {
    push(sv.vectors[i], sv.norms[i]);
    push(-sv.vectors[i], sv.norms[i]);
  }
  return out;
}

void charge(std::uint64_t& nodes, const EnumerationOptions& options) {
  if (++nodes > options.node_budget)
    throw BudgetExceeded("direct sum exceeded the node budget of " + std::to_string(options.node_budget));
}

void check_point(const SiegelJacobiPoint& p, int genus, int width) {
  if (p.genus() != genus) throw ShapeError("point genus does not match");
  if (width >= 0 && p.width() != width) throw ShapeError("point width does not match the Jacobi index");
}

ComplexMatrix parse_complex(const nlohmann::json& doc, const char* re_key, const char* im_key, bool required) {
  auto read = [&](const char* key) -> Eigen::MatrixXd {
    if (!doc.contains(key)) {
      if (required) throw FormatError(std::string("point: missing key \"") + key + "\"");
      return Eigen::MatrixXd(0, 0);
    }
    const nlohmann::json& rows = doc.at(key);
    if (!rows.is_array()) throw FormatError(std::string("point.") + key + ": expected an array of rows");
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index cols = n == 0 ? 0 : static_cast<Eigen::Index>(rows[0].is_array() ? rows[0].size() : 0);
    Eigen::MatrixXd m(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
      const nlohmann::json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
        throw FormatError(std::string("point.") + key + ": ragged matrix");
      for (Eigen::Index j = 0; j < cols; ++j) {
        const nlohmann::json& cell = row[static_cast<std::size_t>(j)];
        if (!cell.is_number()) throw FormatError(std::string("point.") + key + ": entries must be numbers");
        m(i, j) = cell.get<double>();
      }
    }
    return m;
  };
  const Eigen::MatrixXd re = read(re_key);
  const Eigen::MatrixXd im = read(im_key);
  if (re.rows() != im.rows() || re.cols() != im.cols())
    throw FormatError(std::string("point: ") + re_key + " and " + im_key + " differ in shape");
  ComplexMatrix m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

}  // namespace

bool in_siegel_upper_half(const ComplexMatrix& tau, double tol) {
  if (tau.rows() != tau.cols()) throw ShapeError("tau must be square");
  for (Eigen::Index i = 0; i < tau.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (tau(i, j) != tau(j, i)) throw ShapeError("tau must be symmetric");
  const Eigen::MatrixXd im = tau.imag();
  for (Eigen::Index k = 1; k <= im.rows(); ++k)
    if (!(im.topLeftCorner(k, k).determinant() > tol)) return false;
  return true;
}

SiegelJacobiPoint::SiegelJacobiPoint(ComplexMatrix tau, std::optional<ComplexMatrix> z, double tol)
    : tau_(std::move(tau)), z_(z ? std::move(*z) : ComplexMatrix(0, tau_.rows())) {
  if (!in_siegel_upper_half(tau_, tol)) throw DomainError("Im(tau) is not positive definite");
  if (z_.cols() != tau_.rows()) throw ShapeError("z must have g columns");
}

SiegelJacobiPoint parse_point(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("point is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("point: expected an object");
  for (const auto& [key, value] : doc.items())
    if (key != "tau_re" && key != "tau_im" && key != "z_re" && key != "z_im")
      throw FormatError("point: unknown key \"" + key + "\"");
  ComplexMatrix tau = parse_complex(doc, "tau_re", "tau_im", true);
  ComplexMatrix z = parse_complex(doc, "z_re", "z_im", false);
  if (z.size() == 0) z.resize(0, tau.rows());
  try {
    return SiegelJacobiPoint(std::move(tau), std::move(z));
  } catch (const DomainError& e) {
    throw FormatError(std::string("point: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("point: ") + e.what());
  }
}

EvalResult eval_siegel_expansion(const SiegelExpansion& e, const SiegelJacobiPoint& p) {
  check_point(p, e.genus(), -1);
  return sum_table(e.terms(), e.genus(), [&](KeyView key) { return siegel_exponent(key, e.genus(), p.tau()); });
}

EvalResult eval_jacobi_expansion(const JacobiExpansion& f, const SiegelJacobiPoint& p) {
  check_point(p, f.genus(), f.width());
  return sum_table(f.terms(), f.genus(), [&](KeyView key) {
    return siegel_exponent(key, f.genus(), p.tau()) + jacobi_exponent(key, f.genus(), f.width(), p.z());
  });
}

Complex eval_theta_direct(const EvenLattice& lattice, int genus, const SiegelJacobiPoint& p, std::int64_t norm_bound,
                          const EnumerationOptions& options) {
  check_point(p, genus, -1);
  if (norm_bound < 0) throw DomainError("norm bound must be nonnegative");
  if (genus == 0) return 1.0;
  if (genus == 1) {
    const std::vector<std::uint64_t> counts = cached_histogram(lattice, norm_bound);
    Complex sum = 0.0;
    for (std::size_t n = 0; n < counts.size(); ++n)
      if (counts[n] != 0) sum += static_cast<double>(counts[n]) * std::exp(kPi * kI * static_cast<double>(n) * p.tau()(0, 0));
    return sum;
  }

  const SignedVectors table = signed_vectors(lattice, norm_bound);
  using Key = absl::InlinedVector<std::int32_t, 10>;
  absl::flat_hash_map<Key, std::uint64_t> grams;
  Key key(triangle_size(genus), 0);
  std::vector<std::size_t> chosen(static_cast<std::size_t>(genus));
  std::uint64_t nodes = 0;
  auto walk = [&](auto&& self, int q, std::int64_t remaining) -> void {
    if (q == genus) {
      ++grams[key];
      return;
    }
    for (std::size_t j = 0; j < table.norms.size() && table.norms[j] <= remaining; ++j) {
      charge(nodes, options);
      chosen[static_cast<std::size_t>(q)] = j;
      key[triangle_position(q, q)] = narrow_entry(table.norms[j]);
      for (int r = 0; r < q; ++r) key[triangle_position(q, r)] = narrow_entry(table.inner(j, chosen[static_cast<std::size_t>(r)]));
      self(self, q + 1, remaining - table.norms[j]);
    }
  };
  walk(walk, 0, norm_bound);

  std::vector<const std::pair<const Key, std::uint64_t>*> order;
  order.reserve(grams.size());
  for (const auto& entry : grams) order.push_back(&entry);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return canonical_less(KeyView(a->first.data(), a->first.size()), KeyView(b->first.data(), b->first.size()));
  });
  Complex sum = 0.0;
  for (const auto* entry : order)
    sum += static_cast<double>(entry->second) *
           std::exp(siegel_exponent(KeyView(entry->first.data(), entry->first.size()), genus, p.tau()));
  return sum;
}

Complex eval_jacobi_theta_direct(const JacobiIndex& index, int genus, const SiegelJacobiPoint& p,
                                 std::int64_t norm_bound, const EnumerationOptions& options) {
  check_point(p, genus, index.width());
  if (norm_bound < 0) throw DomainError("norm bound must be nonnegative");
  if (!index.positive_definite()) throw DomainError("direct Jacobi theta sum needs a positive definite 2M");
  const int h = index.width();
  const EvenLattice lattice(index.doubled());
  const SignedVectors table = signed_vectors(lattice, norm_bound);
  const ComplexMatrix m = index.doubled().cast<double>().cast<Complex>() / 2.0;

  // Each lambda is summed literally; terms are ordered by their (T, R) key.
  std::vector<std::pair<IndexKey, Complex>> terms;
  IntMatrix lambda(h, genus);
  std::vector<std::size_t> chosen(static_cast<std::size_t>(genus));
  std::uint64_t nodes = 0;
  auto walk = [&](auto&& self, int q, std::int64_t remaining) -> void {
    if (q == genus) {
      const ComplexMatrix l = lambda.cast<double>().cast<Complex>();
      const ComplexMatrix x = l * p.tau() * l.transpose() + 2.0 * l * p.z().transpose();
      const Complex value = std::exp(2.0 * kPi * kI * (m * x).trace());
      const IntMatrix doubled_t = lambda.transpose() * index.doubled() * lambda;
      const IntMatrix r = lambda.transpose() * index.doubled();
      terms.emplace_back(jacobi_key(HalfIntegralMatrix(doubled_t), r), value);
      return;
    }
    for (std::size_t j = 0; j < table.norms.size() && table.norms[j] <= remaining; ++j) {
      charge(nodes, options);
      for (int c = 0; c < h; ++c)
        lambda(c, q) = table.coords[j * static_cast<std::size_t>(h) + static_cast<std::size_t>(c)];
      self(self, q + 1, remaining - table.norms[j]);
    }
    lambda.col(q).setZero();
  };
  walk(walk, 0, norm_bound);
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return canonical_less(a.first, b.first); });
  Complex sum = 0.0;
  for (const auto& term : terms) sum += term.second;
  return sum;
}

InversionReport check_inversion_genus1(const EvenLattice& lattice, Complex tau, double tol,
                                       const EnumerationOptions& options) {
  if (!is_even_unimodular(lattice)) throw DomainError("inversion check needs an even unimodular lattice");
  if (lattice.rank() % 8 != 0) throw DomainError("inversion check needs rank divisible by 8");
  if (!(tau.imag() > 0)) throw DomainError("tau must lie in the upper half plane");
  if (!(tol > 0)) throw DomainError("tolerance must be positive");

  const Complex inverted = -1.0 / tau;
  const int half_rank = static_cast<int>(lattice.rank() / 2);
  Complex factor = 1.0;
  for (int k = 0; k < half_rank; ++k) factor *= tau / kI;
  const double scale = std::abs(factor);
  const double growth = static_cast<double>(half_rank - 1);

  // Shell counts above the enumerated range are extrapolated from the last
  // nonzero shell as c(last) (n / last)^(m/2 - 1).
  auto extrapolated = [&](const std::vector<std::uint64_t>& counts, std::int64_t n) {
    std::int64_t last = static_cast<std::int64_t>(counts.size()) - 1;
    while (last > 0 && counts[static_cast<std::size_t>(last)] == 0) --last;
    if (n <= static_cast<std::int64_t>(counts.size()) - 1) return static_cast<double>(counts[static_cast<std::size_t>(n)]);
    if (last == 0) return 0.0;
    return static_cast<double>(counts[static_cast<std::size_t>(last)]) *
           std::pow(static_cast<double>(n) / static_cast<double>(last), growth);
  };
  auto predicted_tail = [&](const std::vector<std::uint64_t>& counts, std::int64_t cut) {
    double tail = 0.0;
    for (std::int64_t n = cut + 2; n <= cut + 4000; n += 2) {
      // Omitted shell on each side: theta(-1/tau) and (tau/i)^(m/2) theta(tau).
      const double decay = std::exp(-kPi * static_cast<double>(n) * inverted.imag()) +
                           scale * std::exp(-kPi * static_cast<double>(n) * tau.imag());
      const double shell = extrapolated(counts, n) * decay;
      tail += shell;
      if (shell < 1e-6 * tol) break;
    }
    return tail;
  };

  std::int64_t bound = 8;
  std::vector<std::uint64_t> counts = cached_histogram(lattice, bound);
  while (predicted_tail(counts, bound) >= tol / 10) {
    std::int64_t target = bound + 2;
    double points = 0.0;
    for (std::int64_t n = 0; n <= bound; ++n) points += static_cast<double>(counts[static_cast<std::size_t>(n)]);
    while (predicted_tail(counts, target) >= tol / 10) target += 2;
    for (std::int64_t n = bound + 2; n <= target; n += 2) points += extrapolated(counts, n);
    if (points > static_cast<double>(options.node_budget))
      throw BudgetExceeded("certifying the tolerance needs more lattice points than the node budget allows");
    bound = target;
    counts = cached_histogram(lattice, bound);
  }

  InversionReport report;
  report.norm_bound = bound;
  report.tail_estimate = predicted_tail(counts, bound);
  const SiegelJacobiPoint at_tau(ComplexMatrix::Constant(1, 1, tau));
  const SiegelJacobiPoint at_inverted(ComplexMatrix::Constant(1, 1, inverted));
  report.lhs = eval_theta_direct(lattice, 1, at_inverted, bound, options);
  report.rhs = factor * eval_theta_direct(lattice, 1, at_tau, bound, options);
  report.residual = std::abs(report.lhs - report.rhs);
  return report;
}

double translation_residual(const SiegelExpansion& e, const IntMatrix& s) {
  const int g = e.genus();
  if (s.rows() != g || s.cols() != g || !is_symmetric(s)) throw ShapeError("S must be an integral symmetric g x g matrix");
  // 2 sigma(T S) = sum_p D_pp S_pp + 2 sum_{p<q} D_pq S_pq with D = 2T.
  double residual = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const KeyView key = e.terms().key(i);
    std::int64_t twice = 0;
    for (int p = 0; p < g; ++p)
      for (int q = 0; q <= p; ++q) twice += (p == q ? 1 : 2) * std::int64_t{key[triangle_position(p, q)]} * s(p, q);
    if (twice % 2 != 0) residual += 2.0 * std::abs(to_double(e.terms().coefficient(i)));  // e(1/2) - 1 = -2
  }
  return residual;
}

}  // namespace stheta
