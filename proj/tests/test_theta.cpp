#include "oracles.hpp"
#include "test_support.hpp"

#include "stheta/theta.hpp"

#include <Eigen/Dense>

#include <map>
#include <set>

using namespace stheta;

namespace {

IntMatrix mat2(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  IntMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

HalfIntegralMatrix one_by_one(std::int64_t doubled) { return HalfIntegralMatrix(IntMatrix::Constant(1, 1, doubled)); }

bool all_psd(const SiegelExpansion& e) {
  for (std::size_t i = 0; i < e.size(); ++i)
    if (!is_psd_half_integral(e.index(i))) return false;
  return true;
}

}  // namespace

TEST_CASE("representation counts") {
  const EvenLattice e8 = catalog_lattice("E8");
  CHECK(representation_count(e8, HalfIntegralMatrix::zero(1)) == 1);
  CHECK(representation_count(e8, one_by_one(2)) == 240);
  CHECK(representation_count(EvenLattice(IntMatrix::Constant(1, 1, 2)), one_by_one(2)) == 2);
  CHECK(representation_count(e8, one_by_one(4)) == 2160);
  CHECK(representation_count(e8, HalfIntegralMatrix(mat2(2, 1, 1, 2))) == 13440);
  CHECK(representation_count(e8, HalfIntegralMatrix(mat2(2, 3, 3, 2))) == 0);
}

TEST_CASE("E8 pairs of roots by inner product, by a double loop over the roots") {
  const auto roots = oracle::dn_plus_vectors(8, 2);
  REQUIRE(roots.size() == 240);
  std::map<int, std::int64_t> pairs;  // inner product -> ordered pairs
  for (const auto& a : roots)
    for (const auto& b : roots) {
      int dot = 0;
      for (int i = 0; i < 8; ++i) dot += a[i] * b[i];
      ++pairs[dot / 4];
    }
  const EvenLattice e8 = catalog_lattice("E8");
  for (const auto& [ip, count] : pairs) {
    const Coefficient mine = representation_count(e8, HalfIntegralMatrix(mat2(2, ip, ip, 2)));
    CHECK(mine == count);
  }
  CHECK(pairs.at(1) == 13440);
  const SiegelExpansion t2 = siegel_theta(e8, 2, 2);
  CHECK(t2.coefficient(HalfIntegralMatrix(mat2(2, 1, 1, 2))) == 13440);
  CHECK(t2.coefficient(HalfIntegralMatrix(mat2(2, 0, 0, 2))) == pairs.at(0));
  CHECK(t2.coefficient(HalfIntegralMatrix(mat2(2, 2, 2, 2))) == 240);
}

TEST_CASE("genus one theta series against divisor sums") {
  const SiegelExpansion e = siegel_theta(catalog_lattice("E8"), 1, 6);
  CHECK(e.weight() == 4);
  CHECK(e.size() == 7);
  CHECK(e.coefficient(one_by_one(0)) == 1);
  for (int n = 1; n <= 6; ++n) CHECK(e.coefficient(one_by_one(2 * n)) == 240 * oracle::divisor_sigma(3, n));

  // E4^2 = 1 + 480 q + 61920 q^2 + 1050240 q^3.
  const SiegelExpansion d = siegel_theta(catalog_lattice("D16plus"), 1, 3);
  CHECK(d.weight() == 8);
  CHECK(d.coefficient(one_by_one(2)) == 480);
  CHECK(d.coefficient(one_by_one(4)) == 61920);
  CHECK(d.coefficient(one_by_one(6)) == 1050240);
}

TEST_CASE("genus zero is the constant one") {
  for (const char* name : {"E8", "D16plus"}) {
    const SiegelExpansion e = siegel_theta(catalog_lattice(name), 0, 5);
    CHECK(e == SiegelExpansion::constant(0, e.weight(), 5));
  }
}

TEST_CASE("siegel_theta agrees with representation_count") {
  const EvenLattice e8 = catalog_lattice("E8");
  const SiegelExpansion e = siegel_theta(e8, 2, 2);
  CHECK(all_psd(e));
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(e.terms().coefficient(i) == representation_count(e8, e.index(i)));

  const EvenLattice d16 = catalog_lattice("D16plus");
  // The literal count scans the whole vector table per column; keep to roots here.
  const SiegelExpansion f = siegel_theta(d16, 2, 2);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const IntMatrix d = f.index(i).doubled();
    if (d(0, 0) <= 2 && d(1, 1) <= 2) CHECK(f.terms().coefficient(i) == representation_count(d16, f.index(i)));
  }
}

TEST_CASE("siegel_theta is invariant under GL_g(Z)") {
  const SiegelExpansion e = siegel_theta(catalog_lattice("E8"), 3, 2);
  CHECK(all_psd(e));
  IntMatrix u(3, 3);
  u << 1, 1, 0, 0, 1, 0, 0, -1, 1;
  IntMatrix p(3, 3);
  p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  for (const IntMatrix& m : {u, p}) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      const IntMatrix moved = m.transpose() * e.index(i).doubled() * m;
      if (moved.trace() / 2 > e.bound()) continue;
      CHECK(e.coefficient(HalfIntegralMatrix(moved)) == e.terms().coefficient(i));
    }
  }
}

TEST_CASE("thread count does not change the result") {
  EnumerationOptions one, three;
  three.threads = 3;
  const EvenLattice l = catalog_lattice("D16plus");
  CHECK(siegel_theta(l, 2, 2, one) == siegel_theta(l, 2, 2, three));
  CHECK(siegel_theta(catalog_lattice("E8"), 3, 2, one) == siegel_theta(catalog_lattice("E8"), 3, 2, three));
}

TEST_CASE("budget is enforced") {
  EnumerationOptions tiny;
  tiny.node_budget = 100;
  CHECK_THROWS_AS(siegel_theta(catalog_lattice("E8"), 2, 3, tiny), BudgetExceeded);
  CHECK_THROWS_AS(jacobi_theta(JacobiIndex(catalog_lattice("E8")), 2, 3, tiny), BudgetExceeded);
}

TEST_CASE("direct sums: norm-2 diagonal coefficients add") {
  const SiegelExpansion s = siegel_theta(catalog_lattice("E8+E8"), 1, 1);
  CHECK(s.coefficient(one_by_one(0)) == 1);
  CHECK(s.coefficient(one_by_one(2)) == 2 * 240);
  const SiegelExpansion t = siegel_theta(catalog_lattice("D16plus+E8"), 1, 1);
  CHECK(t.coefficient(one_by_one(2)) == 480 + 240);
}

TEST_CASE("prescribed diagonal agrees with the full series") {
  const EvenLattice e8 = catalog_lattice("E8");
  const SiegelExpansion e = siegel_theta(e8, 2, 3);
  const std::vector<std::int64_t> diag{2, 4};
  const auto rows = siegel_theta_with_diagonal(e8, diag);
  std::size_t expected = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const IntMatrix d = e.index(i).doubled();
    if (d(0, 0) == 2 && d(1, 1) == 4) ++expected;
  }
  CHECK(rows.size() == expected);
  for (const auto& [t, c] : rows) CHECK(c == e.coefficient(t));

  const std::vector<std::int64_t> three{2, 2, 2};
  const HalfIntegralMatrix identity(IntMatrix(IntMatrix::Identity(3, 3) * 2));
  Coefficient found = 0;
  for (const auto& [t, c] : siegel_theta_with_diagonal(e8, three))
    if (t == identity) found = c;
  CHECK(found == representation_count(e8, identity));
  CHECK(found > 0);

  // Over all T with this diagonal, the coefficients count every 4-tuple of roots.
  const std::vector<std::int64_t> four{2, 2, 2, 2};
  Coefficient total = 0;
  for (const auto& [t, c] : siegel_theta_with_diagonal(e8, four)) total += c;
  CHECK(total == Coefficient(240) * 240 * 240 * 240);
  CHECK_THROWS_AS(siegel_theta_with_diagonal(e8, std::vector<std::int64_t>{3}), DomainError);
}

TEST_CASE("jacobi theta: values, 0/1 coefficients and lambda reconstruction") {
  const JacobiIndex m(catalog_lattice("E8"));
  const JacobiExpansion j1 = jacobi_theta(m, 1, 1);
  CHECK(j1.weight() == 4);
  CHECK(j1.coefficient(HalfIntegralMatrix::zero(1), IntMatrix::Zero(1, 8)) == 1);
  std::size_t trace_one = 0;
  for (std::size_t i = 0; i < j1.size(); ++i)
    if (j1.t_index(i).trace() == 1) ++trace_one;
  CHECK(trace_one == 240);

  const JacobiExpansion j2 = jacobi_theta(m, 2, 2);
  const Eigen::MatrixXd inv = m.doubled().cast<double>().inverse();
  std::set<std::vector<std::int64_t>> lambdas;
  for (std::size_t i = 0; i < j2.size(); ++i) {
    CHECK(j2.terms().coefficient(i) == 1);
    const IntMatrix r = j2.r_index(i);
    const Eigen::MatrixXd lam = inv * r.transpose().cast<double>();
    const IntMatrix lambda = lam.array().round().cast<std::int64_t>().matrix();
    CHECK((lam - lambda.cast<double>()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(m.doubled() * lambda == r.transpose());
    CHECK(lambda.transpose() * m.doubled() * lambda == j2.t_index(i).doubled());
    CHECK(block_psd(j2.t_index(i), r, m));
    lambdas.insert(std::vector<std::int64_t>(lambda.data(), lambda.data() + lambda.size()));
  }
  CHECK(lambdas.size() == j2.size());
  CHECK_THROWS_AS(jacobi_theta(JacobiIndex(IntMatrix::Constant(1, 1, 2)), 1, 1), DomainError);
}

TEST_CASE("theta_sc") {
  const EvenLattice e8 = catalog_lattice("E8");
  const IntMatrix id = IntMatrix::Identity(8, 8);
  for (int g = 1; g <= 2; ++g) CHECK(theta_sc(e8, id, g, 2) == jacobi_theta(JacobiIndex(e8), g, 2));

  const JacobiExpansion zero_c = theta_sc(e8, IntMatrix::Zero(8, 1), 2, 2);
  const SiegelExpansion s = siegel_theta(e8, 2, 2);
  CHECK(zero_c.size() == s.size());
  for (std::size_t i = 0; i < zero_c.size(); ++i) {
    CHECK(zero_c.r_index(i).isZero());
    CHECK(zero_c.terms().coefficient(i) == s.coefficient(zero_c.t_index(i)));
  }

  IntMatrix c(8, 2);
  c << 1, 0, 0, 1, 1, 0, -1, 1, 0, 0, 0, -1, 1, 0, 0, 1;
  const JacobiExpansion f = theta_sc(e8, c, 1, 2);
  CHECK(f.weight() == 4);
  CHECK(f.index().doubled() == c.transpose() * e8.gram() * c);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(block_psd(f.t_index(i), f.r_index(i), f.index()));
  CHECK_THROWS_AS(theta_sc(catalog_lattice("E8"), IntMatrix::Zero(7, 1), 1, 1), ShapeError);
}
