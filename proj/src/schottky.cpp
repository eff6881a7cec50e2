#include "stheta/schottky.hpp"

#include "stheta/operators.hpp"

#include <json.hpp>

#include <array>

namespace stheta {

SiegelExpansion theta_difference(const EvenLattice& p, const EvenLattice& q, int genus, int bound,
                                 const EnumerationOptions& options) {
  if (p.rank() != q.rank()) throw ShapeError("theta_difference: rank mismatch");
  if (!is_even_unimodular(p) || !is_even_unimodular(q))
    throw DomainError("theta_difference needs even unimodular lattices");
  const std::array<SiegelExpansion, 2> parts{siegel_theta(p, genus, bound, options),
                                             siegel_theta(q, genus, bound, options)};
  const std::array<Coefficient, 2> coeffs{1, -1};
  return linear_combine(coeffs, parts);
}

SiegelExpansion igusa_form(int genus, int bound, const EnumerationOptions& options) {
  return theta_difference(catalog_lattice("E8+E8"), catalog_lattice("D16plus"), genus, bound, options);
}

LowNormCase low_norm_case(const EvenLattice& p, const EvenLattice& q) {
  if (p.rank() != q.rank()) return LowNormCase::none;
  const NormProfile a = count_vectors_by_norm(p, 4);
  const NormProfile b = count_vectors_by_norm(q, 4);
  switch (p.rank()) {
    case 24:
      if (a.count(2) == b.count(2)) return LowNormCase::rank24_equal_roots;
      break;
    case 32:
      if (a.count(2) == 0 && b.count(2) == 0) return LowNormCase::rank32_rootless;
      break;
    case 48:
      if (a.count(2) == 0 && b.count(2) == 0 && a.count(4) == 0 && b.count(4) == 0)
        return LowNormCase::rank48_no_norm_2_4;
      break;
    default:
      break;
  }
  return LowNormCase::none;
}

bool mu_condition(const EvenLattice& p, const EvenLattice& q) {
  if (p.rank() != q.rank()) throw ShapeError("mu_condition: rank mismatch");
  const std::int64_t mu = std::min(min_norm(p), min_norm(q));
  return p.rank() <= 8 * mu;
}

PairCondition pair_condition(const EvenLattice& p, const EvenLattice& q) {
  if (p.rank() != q.rank()) throw ShapeError("pair_condition: rank mismatch");
  PairCondition c;
  c.rank_p = p.rank();
  c.rank_q = q.rank();
  c.profile_p = count_vectors_by_norm(p, 4);
  c.profile_q = count_vectors_by_norm(q, 4);
  c.mu_p = min_norm(p);
  c.mu_q = min_norm(q);
  c.mu_condition = mu_condition(p, q);
  c.low_norm = low_norm_case(p, q);
  return c;
}

std::string PairCondition::to_json() const {
  auto profile = [](const NormProfile& n) {
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [norm, count] : n.counts) counts[std::to_string(norm)] = to_decimal(count);
    return counts;
  };
  nlohmann::ordered_json doc;
  doc["rank_p"] = rank_p;
  doc["rank_q"] = rank_q;
  doc["norm_counts_p"] = profile(profile_p);
  doc["norm_counts_q"] = profile(profile_q);
  doc["mu_p"] = mu_p;
  doc["mu_q"] = mu_q;
  doc["mu_condition"] = mu_condition;
  if (low_norm == LowNormCase::none)
    doc["low_norm_case"] = "none";
  else
    doc["low_norm_case"] = static_cast<int>(low_norm);
  return doc.dump(2) + "\n";
}

SchottkyCandidate schottky_jacobi_candidate(const EvenLattice& p, const EvenLattice& q, const JacobiIndex& index,
                                            int genus, int bound, const EnumerationOptions& options) {
  if (p.rank() != q.rank()) throw ShapeError("schottky_jacobi_candidate: rank mismatch");
  if (!index.positive_definite() || exact_determinant(index.doubled()) != 1)
    throw DomainError("schottky_jacobi_candidate needs an even unimodular 2M");
  PairCondition condition = pair_condition(p, q);
  const bool warning = !condition.mu_condition;
  const SiegelExpansion difference = theta_difference(q, p, genus, bound, options);
  const int weight = difference.weight() + index.width() / 2;
  if (difference.is_zero())
    return {JacobiExpansion::zero(genus, index, weight, difference.bound()), std::move(condition), warning};
  return {shimura_product(difference, jacobi_theta(index, genus, bound, options)), std::move(condition), warning};
}

}  // namespace stheta
