// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "cli.hpp"
#include "oracles.hpp"
#include "random_expansions.hpp"

#include "stheta/numeric.hpp"
#include "stheta/operators.hpp"
#include "stheta/schottky.hpp"
#include "stheta/serialize.hpp"
#include "stheta/theta.hpp"

#include <Eigen/Dense>

#include <bitset>
#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

using namespace stheta;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

HalfIntegralMatrix one_by_one(std::int64_t doubled) { return HalfIntegralMatrix(IntMatrix::Constant(1, 1, doubled)); }

// ---------------------------------------------------------------------------

Outcome genus_one_coefficients() {
  Outcome o;
  const auto start = Clock::now();
  std::istringstream in;
  std::ostringstream out, err;
  const int code = cli::run({"stable_theta", "theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "5"}, in,
                            out, err);
  const double elapsed = seconds_since(start);
  o.require(code == 0, "command failed: " + err.str());
  if (code != 0) return o;
  const SiegelExpansion e = deserialize_siegel(out.str());
  const std::vector<Coefficient> expected{1, 240, 2160, 6720, 17520, 30240};
  o.require(e.size() == expected.size(), "wrong number of terms");
  for (int n = 0; n <= 5; ++n) {
    const Coefficient c = e.coefficient(one_by_one(2 * n));
    o.require(c == expected[static_cast<std::size_t>(n)], "coefficient " + std::to_string(n));
    if (n > 0) o.require(c == 240 * oracle::divisor_sigma(3, n), "divisor sum at " + std::to_string(n));
  }
  const auto coordinates = oracle::dn_plus_profile(8, 10);
  for (int n = 1; n <= 5; ++n)
    o.require(e.coefficient(one_by_one(2 * n)) == coordinates.at(2 * n), "coordinate box count at " + std::to_string(n));
  const auto box = oracle::box_short_vectors(catalog_lattice("E8").gram(), 4);
  std::int64_t roots = 0, norm4 = 0;
  for (const auto& v : box) {
    const Eigen::Map<const IntVector> x(v.data(), static_cast<Eigen::Index>(v.size()));
    (catalog_lattice("E8").norm(x) == 2 ? roots : norm4) += 2;
  }
  o.require(roots == 240 && norm4 == 2160, "Gram-basis box count");
  o.require(elapsed < 1.0, "command took " + std::to_string(elapsed) + " s");
  o.detail = o.pass ? "1, 240, 2160, 6720, 17520, 30240 in " + std::to_string(elapsed) + " s" : o.detail;
  return o;
}

// Ordered 4-tuples of pairwise orthogonal roots, from explicit root coordinates.
std::int64_t orthogonal_root_quadruples(const std::vector<std::vector<int>>& roots) {
  constexpr std::size_t kMax = 480;
  const std::size_t n = roots.size();
  if (n > kMax) throw std::runtime_error("too many roots for the bitset oracle");
  std::vector<std::bitset<kMax>> orth(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      int dot = 0;
      for (std::size_t i = 0; i < roots[a].size(); ++i) dot += roots[a][i] * roots[b][i];
      if (dot == 0) orth[a].set(b);
    }
  std::int64_t total = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (!orth[a][b]) continue;
      const auto ab = orth[a] & orth[b];
      for (std::size_t c = 0; c < n; ++c)
        if (ab[c]) total += static_cast<std::int64_t>((ab & orth[c]).count());
    }
  return total;
}

Outcome igusa_vanishing() {
  Outcome o;
  const auto start = Clock::now();
  for (int g = 1; g <= 3; ++g) o.require(igusa_form(g, 3).is_zero(), "phi_" + std::to_string(g) + " is not zero");

  const std::vector<std::int64_t> diagonal{2, 2, 2, 2};
  const auto p = siegel_theta_with_diagonal(catalog_lattice("E8+E8"), diagonal);
  const auto q = siegel_theta_with_diagonal(catalog_lattice("D16plus"), diagonal);
  TermAccumulator acc(triangle_size(4));
  for (const auto& [t, c] : p) acc.add(siegel_key(t), c);
  for (const auto& [t, c] : q) acc.add(siegel_key(t), -c);
  const CoefficientTable diff = acc.finish();
  o.require(!diff.empty(), "phi_4 vanishes on diag(2T) = (2,2,2,2)");

  // 2T = 2 I_4 against an independent count of orthogonal root quadruples.
  const HalfIntegralMatrix identity(IntMatrix::Identity(4, 4) * 2);
  const auto e8_roots = oracle::dn_plus_vectors(8, 2);
  std::vector<std::vector<int>> e16_roots;
  for (const auto& r : e8_roots) {
    std::vector<int> left(r), right(8, 0);
    left.insert(left.end(), 8, 0);
    right.insert(right.end(), r.begin(), r.end());
    e16_roots.push_back(left);
    e16_roots.push_back(right);
  }
  const std::int64_t expected = orthogonal_root_quadruples(e16_roots) -
                                orthogonal_root_quadruples(oracle::dn_plus_vectors(16, 2));
  const Coefficient at_identity = diff.find(siegel_key(identity));
  o.require(at_identity == expected, "coefficient at 2T = 2I disagrees with the root-quadruple oracle");
  o.require(expected != 0, "oracle coefficient at 2T = 2I is zero");
  const double elapsed = seconds_since(start);
  o.require(elapsed < 300.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass)
    o.detail = "phi_1..3 = 0 at N=3; phi_4 has " + std::to_string(diff.size()) + " nonzero coefficients with diag (2,2,2,2), " +
               to_decimal(at_identity) + " at 2T=2I; " + std::to_string(elapsed) + " s";
  return o;
}

Outcome stability() {
  Outcome o;
  const auto start = Clock::now();
  for (const char* name : {"E8", "D16plus", "E8+E8"}) {
    std::vector<SiegelExpansion> family;
    for (int g = 0; g <= 4; ++g) family.push_back(siegel_theta(catalog_lattice(name), g, 2));
    o.require(verify_stable(family).passed(), std::string("Phi stability fails for ") + name);
  }
  std::vector<JacobiExpansion> jfamily;
  for (int g = 0; g <= 3; ++g) jfamily.push_back(jacobi_theta(JacobiIndex(catalog_lattice("E8")), g, 2));
  o.require(verify_stable(jfamily).passed(), "Psi stability fails for vartheta_E8");
  const double elapsed = seconds_since(start);
  o.require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass) o.detail = "E8, D16plus, E8+E8 to g=4 and vartheta_E8 to g=3 at N=2; " + std::to_string(elapsed) + " s";
  return o;
}

Outcome intertwining() {
  Outcome o;
  const JacobiIndex m(catalog_lattice("E8"));
  for (int g = 2; g <= 3; ++g) {
    const SiegelExpansion f = siegel_theta(catalog_lattice("E8+E8"), g, 2);
    const JacobiExpansion theta = jacobi_theta(m, g, 2);
    const JacobiExpansion lhs = siegel_jacobi_psi(shimura_product(f, theta));
    const JacobiExpansion rhs = shimura_product(siegel_phi(f), siegel_jacobi_psi(theta));
    o.require(lhs == rhs, "Psi(f theta) != Phi(f) Psi(theta) at g=" + std::to_string(g));
    o.require(!lhs.is_zero(), "trivial comparison at g=" + std::to_string(g));
  }
  if (o.pass) o.detail = "g=2,3 at N=2";
  return o;
}

// Every term sits on det = 0, has coefficient 1 and determines lambda through R.
void check_singular_theta(Outcome& o, const JacobiExpansion& f, const IntMatrix& s, const IntMatrix& c,
                          const std::string& label) {
  o.require(singular_support_check(f).all_singular, label + ": nonsingular term");
  const IntMatrix sc = s * c;
  const Eigen::MatrixXd sc_inverse = sc.cast<double>().inverse();
  for (std::size_t i = 0; i < f.size(); ++i) {
    o.require(f.terms().coefficient(i) == 1, label + ": coefficient other than 0/1");
    const IntMatrix r = f.r_index(i);
    // lambda^T (S c) = R.
    const Eigen::MatrixXd lt = r.cast<double>() * sc_inverse;
    const IntMatrix lambda_t = lt.array().round().cast<std::int64_t>().matrix();
    o.require((lt - lambda_t.cast<double>()).cwiseAbs().maxCoeff() < 1e-9, label + ": lambda not integral");
    o.require(lambda_t * sc == r, label + ": lambda does not reproduce R");
    o.require(lambda_t * s * lambda_t.transpose() == f.t_index(i).doubled(), label + ": lambda does not reproduce T");
    o.require(exact_determinant(doubled_block(f.t_index(i), r, f.index())) == 0, label + ": block determinant");
  }
}

Outcome singular_support() {
  Outcome o;
  const EvenLattice e8 = catalog_lattice("E8");
  const IntMatrix id = IntMatrix::Identity(8, 8);
  IntMatrix u = id;
  u(0, 1) = 1;
  u(3, 5) = -2;
  u(7, 2) = 1;
  std::size_t terms = 0;
  for (int g = 1; g <= 2; ++g) {
    const int n = g == 1 ? 3 : 2;
    const JacobiExpansion theta = jacobi_theta(JacobiIndex(e8), g, n);
    check_singular_theta(o, theta, e8.gram(), id, "vartheta_E8 g=" + std::to_string(g));
    terms += theta.size();
    for (const IntMatrix& c : {u, IntMatrix(2 * id)}) {
      const JacobiExpansion sc = theta_sc(e8, c, g, n);
      check_singular_theta(o, sc, e8.gram(), c, "theta_{S,c} g=" + std::to_string(g));
      terms += sc.size();
    }
  }
  if (o.pass) o.detail = std::to_string(terms) + " terms checked";
  return o;
}

Outcome schottky_construction() {
  Outcome o;
  const EvenLattice p = catalog_lattice("E8+E8");
  const EvenLattice q = catalog_lattice("D16plus");
  o.require(mu_condition(p, q), "mu condition");
  std::vector<JacobiExpansion> family;
  const JacobiIndex m(catalog_lattice("E8"));
  for (int g = 0; g <= 3; ++g) {
    const SchottkyCandidate f = schottky_jacobi_candidate(p, q, m, g, 3);
    o.require(f.form.weight() == 12, "weight tag");
    o.require(f.form.is_zero(), "F_" + std::to_string(g) + " is not zero");
    o.require(!f.hypothesis_warning, "unexpected hypothesis warning");
    family.push_back(f.form);
  }
  o.require(verify_stable(family).passed(), "verify_stable");
  if (o.pass) o.detail = "16/2 = 8, weight 12, F_g = 0 for g <= 3 at N=3, stable";
  return o;
}

Outcome low_norm_detector() {
  Outcome o;
  const PairCondition c = pair_condition(catalog_lattice("E8+E8+E8"), catalog_lattice("D16plus+E8"));
  o.require(c.low_norm == LowNormCase::rank24_equal_roots, "rank-24 pair is not case 1");
  o.require(c.profile_p.count(2) == 720 && c.profile_q.count(2) == 720, "norm-2 counts");
  o.require(low_norm_case(catalog_lattice("E8+E8"), catalog_lattice("D16plus")) == LowNormCase::none,
            "rank-16 pair is not none");
  if (o.pass) o.detail = "case 1 with 720/720 roots; rank-16 pair none";
  return o;
}

Outcome numeric_modularity() {
  Outcome o;
  const auto start = Clock::now();
  double worst = 0.0;
  for (const char* name : {"E8", "D16plus"})
    for (Complex tau : {Complex(0, 1.2), Complex(0.3, 1.1)}) {
      const InversionReport r = check_inversion_genus1(catalog_lattice(name), tau);
      o.require(r.residual < 1e-8, std::string("inversion residual for ") + name);
      worst = std::max(worst, r.residual);
    }
  const SiegelExpansion e = siegel_theta(catalog_lattice("E8"), 1, 5);
  o.require(translation_residual(e, IntMatrix::Constant(1, 1, 1)) == 0.0, "translation residual");
  IntMatrix s(2, 2);
  s << 1, 1, 1, -2;
  o.require(translation_residual(siegel_theta(catalog_lattice("E8"), 2, 2), s) == 0.0, "genus-2 translation residual");

  const EvenLattice e8 = catalog_lattice("E8");
  ComplexMatrix tau = ComplexMatrix::Zero(2, 2);
  tau(0, 0) = Complex(0, 1.5);
  tau(1, 1) = Complex(0, 2.0);
  const Complex joint = eval_theta_direct(e8, 2, SiegelJacobiPoint(tau), 8);
  const Complex a = eval_theta_direct(e8, 1, SiegelJacobiPoint(ComplexMatrix::Constant(1, 1, tau(0, 0))), 8);
  const Complex b = eval_theta_direct(e8, 1, SiegelJacobiPoint(ComplexMatrix::Constant(1, 1, tau(1, 1))), 8);
  const double block = std::abs(joint - a * b);
  o.require(block < 1e-9, "block factorization residual " + std::to_string(block));
  const double elapsed = seconds_since(start);
  o.require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass) {
    std::ostringstream d;
    d << "max inversion residual " << worst << ", translation 0, block residual " << block << "; " << elapsed << " s";
    o.detail = d.str();
  }
  return o;
}

Outcome serialization() {
  Outcome o;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const AnyExpansion e = testing_support::random_expansion(rng);
    const std::string first = serialize(e);
    const AnyExpansion back = deserialize(first);
    o.require(back == e, "round trip differs at case " + std::to_string(i));
    o.require(serialize(back) == first, "re-serialization differs at case " + std::to_string(i));
  }
  if (o.pass) o.detail = "100 random cases";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"genus-1 theta coefficients of E8", genus_one_coefficients},
      {"Igusa form vanishing and genus-4 nonvanishing", igusa_vanishing},
      {"stability of theta families", stability},
      {"intertwining of Psi with the product", intertwining},
      {"singular support of Jacobi theta series", singular_support},
      {"Schottky-Jacobi construction", schottky_construction},
      {"low-norm case detector", low_norm_detector},
      {"numeric modularity", numeric_modularity},
      {"serialization round trip", serialization},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " (" << o.detail
              << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
