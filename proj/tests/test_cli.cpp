#include "test_support.hpp"

#include "cli.hpp"
#include "stheta/serialize.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stheta;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, const std::string& stdin_text = {}) {
  args.insert(args.begin(), "stable_theta");
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "stable_theta_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

}  // namespace

TEST_CASE("theta siegel") {
  const Result r = run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "3"});
  REQUIRE(r.code == 0);
  const SiegelExpansion e = deserialize_siegel(r.out);
  std::vector<Coefficient> coeffs;
  for (std::size_t i = 0; i < e.size(); ++i) coeffs.push_back(e.terms().coefficient(i));
  CHECK(coeffs == std::vector<Coefficient>{1, 240, 2160, 6720});
  CHECK(r.out.back() == '\n');
  // Identical invocations give identical bytes, independent of thread count.
  CHECK(run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "3"}).out == r.out);
  CHECK(run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "3", "--threads", "2"}).out == r.out);
}

TEST_CASE("table format") {
  const Result r = run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "1", "--format", "table"});
  REQUIRE(r.code == 0);
  CHECK(r.out == "# kind siegel  genus 1  weight 4  bound 1  terms 2\n[[0]]  1\n[[2]]  240\n");
}

TEST_CASE("other expansion commands") {
  const Result ig = run_cli({"igusa", "--genus", "2", "--bound", "3"});
  REQUIRE(ig.code == 0);
  CHECK(deserialize_siegel(ig.out) == SiegelExpansion::zero(2, 8, 3));

  const Result jt = run_cli({"theta", "jacobi", "--index-lattice", "E8", "--genus", "1", "--bound", "1"});
  REQUIRE(jt.code == 0);
  CHECK(deserialize_jacobi(jt.out).size() == 241);

  const fs::path c = scratch("c.json", "[[1],[0],[0],[0],[0],[0],[0],[0]]");
  const Result sc = run_cli({"theta", "sc", "--lattice", "E8", "--c-matrix", c.string(), "--genus", "1", "--bound", "1"});
  REQUIRE(sc.code == 0);
  CHECK(deserialize_jacobi(sc.out).index().doubled()(0, 0) == 2);

  const Result d = run_cli({"diff", "--p", "E8+E8+E8", "--q", "D16plus+E8", "--genus", "1", "--bound", "2"});
  REQUIRE(d.code == 0);
  CHECK(deserialize_siegel(d.out).is_zero());

  const Result sj = run_cli({"schottky-jacobi", "--p", "E8+E8", "--q", "D16plus", "--index-lattice", "E8", "--genus",
                             "2", "--bound", "2"});
  REQUIRE(sj.code == 0);
  CHECK(deserialize_jacobi(sj.out).weight() == 12);
  CHECK(sj.err.empty());

  const Result warn = run_cli({"schottky-jacobi", "--p", "E8+E8+E8", "--q", "D16plus+E8", "--index-lattice", "E8",
                               "--genus", "1", "--bound", "1"});
  CHECK(warn.code == 0);
  CHECK(warn.err.find("warning") != std::string::npos);
}

TEST_CASE("operators through files and stdin") {
  const Result t2 = run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "2", "--bound", "2"});
  const Result t1 = run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "2"});
  const Result phi = run_cli({"op", "phi", "--input", "-"}, t2.out);
  REQUIRE(phi.code == 0);
  CHECK(phi.out == t1.out);

  const Result j2 = run_cli({"theta", "jacobi", "--index-lattice", "E8", "--genus", "2", "--bound", "1"});
  const Result j1 = run_cli({"theta", "jacobi", "--index-lattice", "E8", "--genus", "1", "--bound", "1"});
  const fs::path jp = scratch("j2.json", j2.out);
  const Result psi = run_cli({"op", "psi", "--input", jp.string()});
  REQUIRE(psi.code == 0);
  CHECK(psi.out == j1.out);

  const fs::path sp = scratch("t1.json", t1.out);
  const fs::path j1p = scratch("j1.json", run_cli({"theta", "jacobi", "--index-lattice", "E8", "--genus", "1", "--bound", "2"}).out);
  const Result prod = run_cli({"product", "--input", sp.string(), j1p.string()});
  REQUIRE(prod.code == 0);
  const JacobiExpansion p = deserialize_jacobi(prod.out);
  CHECK(p.weight() == 8);
  CHECK(p.coefficient(HalfIntegralMatrix(IntMatrix::Constant(1, 1, 2)), IntMatrix::Zero(1, 8)) == 240);

  const fs::path out = fs::temp_directory_path() / "stable_theta_cli_test" / "phi_out.json";
  const Result to_file = run_cli({"op", "phi", "--input", "-", "--out", out.string()}, t2.out);
  CHECK(to_file.code == 0);
  CHECK(to_file.out.empty());
  std::ifstream f(out, std::ios::binary);
  std::stringstream buf;
  buf << f.rdbuf();
  CHECK(buf.str() == t1.out);
}

TEST_CASE("verify stable") {
  const Result ok = run_cli({"verify", "stable", "--kind", "siegel", "--lattice", "E8", "--max-genus", "3", "--bound", "2"});
  CHECK(ok.code == 0);
  const auto doc = nlohmann::json::parse(ok.out);
  CHECK(doc["steps"].size() == 3);
  for (const auto& step : doc["steps"]) CHECK(step["pass"] == true);

  const Result j = run_cli({"verify", "stable", "--kind", "jacobi", "--index-lattice", "E8", "--max-genus", "2", "--bound", "2"});
  CHECK(j.code == 0);

  const fs::path a = scratch("f1.json", run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "2"}).out);
  const fs::path b = scratch("f2.json", serialize(SiegelExpansion::zero(2, 4, 2)));
  const Result bad = run_cli({"verify", "stable", "--input", b.string(), a.string()});
  CHECK(bad.code == 1);
  CHECK(nlohmann::json::parse(bad.out)["steps"][0]["pass"] == false);

  CHECK(run_cli({"verify", "stable", "--kind", "other", "--lattice", "E8", "--max-genus", "1"}).code == 2);
}

TEST_CASE("verify singular") {
  const Result j = run_cli({"theta", "jacobi", "--index-lattice", "E8", "--genus", "2", "--bound", "1"});
  const Result ok = run_cli({"verify", "singular", "--input", "-"}, j.out);
  CHECK(ok.code == 0);
  CHECK(nlohmann::json::parse(ok.out)["all_singular"] == true);

  const std::string doc =
      "{\"kind\":\"jacobi\",\"genus\":1,\"width\":2,\"index_gram_doubled\":[[2,-1],[-1,2]],\"weight\":1,\"bound\":1,"
      "\"terms\":[{\"T2\":[[2]],\"R\":[[0,0]],\"c\":\"1\"}]}";
  const Result bad = run_cli({"verify", "singular", "--input", "-"}, doc);
  CHECK(bad.code == 1);
  CHECK(nlohmann::json::parse(bad.out)["witness"] == "+0000000002;+0000000000,+0000000000");
}

TEST_CASE("lattice info and pair check") {
  const Result info = run_cli({"lattice", "info", "--lattice", "D16plus", "--bound", "2"});
  REQUIRE(info.code == 0);
  const auto doc = nlohmann::json::parse(info.out);
  CHECK(doc["rank"] == 16);
  CHECK(doc["determinant"] == "1");
  CHECK(doc["min_norm"] == 2);
  CHECK(doc["norm_counts"]["2"] == "480");
  CHECK(doc["norm_counts"]["4"] == "61920");

  const Result pair = run_cli({"check", "pair", "--p", "E8+E8+E8", "--q", "D16plus+E8"});
  REQUIRE(pair.code == 0);
  const auto p = nlohmann::json::parse(pair.out);
  CHECK(p["low_norm_case"] == 1);
  CHECK(p["mu_condition"] == false);
}

TEST_CASE("numeric commands") {
  const std::string point = R"({"tau_re": [[0.3]], "tau_im": [[1.1]]})";
  const Result inv = run_cli({"check", "inversion", "--lattice", "E8", "--input", "-"}, point);
  CHECK(inv.code == 0);
  CHECK(nlohmann::json::parse(inv.out)["pass"] == true);

  const Result strict = run_cli({"check", "inversion", "--lattice", "E8", "--input", "-", "--tol", "1e-300"}, point);
  CHECK(strict.code != 0);

  const Result direct = run_cli({"eval", "--lattice", "E8", "--bound", "4", "--input", "-"}, point);
  REQUIRE(direct.code == 0);
  const double re = nlohmann::json::parse(direct.out)["value"]["re"];
  const fs::path e = scratch("e8.json", run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "4"}).out);
  const fs::path pt = scratch("pt.json", point);
  const Result series = run_cli({"eval", "--input", e.string(), pt.string()});
  REQUIRE(series.code == 0);
  CHECK(std::abs(double(nlohmann::json::parse(series.out)["value"]["re"]) - re) < 1e-12);
}

TEST_CASE("exit codes for bad usage and budgets") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"theta", "siegel", "--genus", "x"}).code == 2);
  CHECK(run_cli({"theta", "siegel", "--lattice", "E7", "--genus", "1"}).code == 2);
  CHECK(run_cli({"theta", "siegel", "--lattice", "E8"}).code == 2);
  CHECK(run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--format", "xml"}).code == 2);
  CHECK(run_cli({"op", "phi", "--input", "-"}, "{\"kind\":\"siegel\"}").code == 2);
  CHECK(run_cli({"op", "phi", "--input", "/nonexistent/file.json"}).code == 2);

  const fs::path tiny = scratch("tiny.json", R"({"node_budget": 50})");
  const Result budget = run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "2", "--bound", "3", "--config", tiny.string()});
  CHECK(budget.code == 3);
  CHECK(budget.err.find("budget") != std::string::npos);
}

TEST_CASE("config files") {
  const fs::path cfg = scratch("cfg.json", R"({"default_bound": 1, "format": "table", "threads": 2})");
  const Result r = run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--config", cfg.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("bound 1") != std::string::npos);
  // Flags override the config.
  const Result j = run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--config", cfg.string(), "--format", "json"});
  CHECK(deserialize_siegel(j.out).bound() == 1);

  const fs::path unknown = scratch("unknown.json", R"({"colour": "red"})");
  CHECK(run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--config", unknown.string()}).code == 2);
  const fs::path negative = scratch("negative.json", R"({"default_bound": -1})");
  CHECK(run_cli({"theta", "siegel", "--lattice", "E8", "--genus", "1", "--config", negative.string()}).code == 2);

  const fs::path catalog = scratch("catalog.json", R"({"name": "A2", "gram": [[2,-1],[-1,2]], "allow_non_unimodular": true})");
  const fs::path with_catalog = scratch("with_catalog.json", "{\"catalog_path\": " + nlohmann::json(catalog.string()).dump() + "}");
  ::setenv("STABLE_THETA_CONFIG", with_catalog.string().c_str(), 1);
  const Result a2 = run_cli({"theta", "siegel", "--lattice", "A2", "--genus", "1", "--bound", "1"});
  ::unsetenv("STABLE_THETA_CONFIG");
  REQUIRE(a2.code == 0);
  CHECK(deserialize_siegel(a2.out).coefficient(HalfIntegralMatrix(IntMatrix::Constant(1, 1, 2))) == 6);
}
