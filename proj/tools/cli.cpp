#include "cli.hpp"

#include "stheta/lattice.hpp"
#include "stheta/numeric.hpp"
#include "stheta/operators.hpp"
#include "stheta/schottky.hpp"
#include "stheta/serialize.hpp"
#include "stheta/theta.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace stheta::cli {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  int default_bound = 2;
  std::uint64_t node_budget = EnumerationOptions{}.node_budget;
  std::string catalog_path;
  std::string format = "json";
  int threads = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot open " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

RunConfig load_config(const std::string& path) {
  RunConfig config;
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw FormatError("config: expected an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "default_bound") {
      if (!value.is_number_integer() || value.get<std::int64_t>() <= 0) throw FormatError("config.default_bound: expected a positive integer");
      config.default_bound = value.get<int>();
    } else if (key == "node_budget") {
      if (!value.is_number_integer() || value.get<std::int64_t>() <= 0) throw FormatError("config.node_budget: expected a positive integer");
      config.node_budget = value.get<std::uint64_t>();
    } else if (key == "catalog_path") {
      if (!value.is_string()) throw FormatError("config.catalog_path: expected a string");
      config.catalog_path = value.get<std::string>();
    } else if (key == "format") {
      if (!value.is_string() || (value != "json" && value != "table")) throw FormatError("config.format: expected \"json\" or \"table\"");
      config.format = value.get<std::string>();
    } else if (key == "threads") {
      if (!value.is_number_integer() || value.get<std::int64_t>() <= 0) throw FormatError("config.threads: expected a positive integer");
      config.threads = value.get<int>();
    } else {
      throw FormatError("config: unknown key \"" + key + "\"");
    }
  }
  return config;
}

struct Flags {
  std::string lattice;
  std::string index_lattice;
  std::optional<int> genus;
  std::optional<int> bound;
  std::optional<int> max_genus;
  std::string kind;
  std::string p;
  std::string q;
  std::string c_matrix;
  std::vector<std::string> inputs;
  std::string out;
  std::string format;
  std::optional<double> tol;
  std::optional<int> threads;
  std::string config;
};

class Session {
 public:
  Session(const Flags& flags, std::istream& in, std::ostream& err) : flags_(flags), in_(in), err_(err) {
    std::string config_path = flags.config;
    if (config_path.empty())
      if (const char* env = std::getenv("STABLE_THETA_CONFIG")) config_path = env;
    if (!config_path.empty()) config_ = load_config(config_path);
    if (!flags.format.empty()) config_.format = flags.format;
    if (flags.threads) config_.threads = *flags.threads;
    if (config_.threads <= 0) throw UsageError("--threads must be positive");
    catalog_ = LatticeCatalog::builtin();
    if (!config_.catalog_path.empty()) catalog_.load_json(config_.catalog_path);
    options_.node_budget = config_.node_budget;
    options_.threads = config_.threads;
  }

  const EnumerationOptions& options() const { return options_; }
  bool table() const { return config_.format == "table"; }

  int genus() const {
    if (!flags_.genus) throw UsageError("--genus is required");
    if (*flags_.genus < 0) throw UsageError("--genus must be nonnegative");
    return *flags_.genus;
  }
  int bound() const {
    const int b = flags_.bound.value_or(config_.default_bound);
    if (b < 0) throw UsageError("--bound must be nonnegative");
    return b;
  }
  int max_genus() const {
    if (!flags_.max_genus) throw UsageError("--max-genus is required");
    if (*flags_.max_genus < 0) throw UsageError("--max-genus must be nonnegative");
    return *flags_.max_genus;
  }
  double tol() const { return flags_.tol.value_or(1e-8); }

  EvenLattice lattice(const std::string& value, const char* flag) const {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
    return catalog_.lookup(value);
  }
  EvenLattice lattice() const { return lattice(flags_.lattice, "--lattice"); }
  EvenLattice p() const { return lattice(flags_.p, "--p"); }
  EvenLattice q() const { return lattice(flags_.q, "--q"); }
  JacobiIndex index() const {
    const std::string& name = flags_.index_lattice.empty() ? flags_.lattice : flags_.index_lattice;
    return JacobiIndex(lattice(name, "--index-lattice"));
  }

  std::vector<std::string> inputs(std::size_t expected_min, std::size_t expected_max) {
    if (flags_.inputs.size() < expected_min || flags_.inputs.size() > expected_max)
      throw UsageError("expected " + std::to_string(expected_min) +
                       (expected_min == expected_max ? "" : ".." + std::to_string(expected_max)) + " --input arguments");
    std::vector<std::string> texts;
    bool stdin_used = false;
    for (const std::string& path : flags_.inputs) {
      if (path == "-") {
        if (stdin_used) throw UsageError("stdin can be read only once");
        stdin_used = true;
        std::ostringstream buffer;
        buffer << in_.rdbuf();
        texts.push_back(buffer.str());
      } else {
        texts.push_back(read_file(path));
      }
    }
    return texts;
  }

  IntMatrix c_matrix() const {
    if (flags_.c_matrix.empty()) throw UsageError("--c-matrix is required");
    json doc;
    try {
      doc = json::parse(read_file(flags_.c_matrix));
    } catch (const json::exception& e) {
      throw FormatError("c-matrix: " + std::string(e.what()));
    }
    if (!doc.is_array() || doc.empty() || !doc[0].is_array()) throw FormatError("c-matrix: expected [[int,...],...]");
    IntMatrix c(static_cast<Eigen::Index>(doc.size()), static_cast<Eigen::Index>(doc[0].size()));
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (!doc[i].is_array() || doc[i].size() != doc[0].size()) throw FormatError("c-matrix: ragged rows");
      for (std::size_t j = 0; j < doc[i].size(); ++j) {
        if (!doc[i][j].is_number_integer()) throw FormatError("c-matrix: entries must be integers");
        c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = doc[i][j].get<std::int64_t>();
      }
    }
    return c;
  }

  std::ostream& warn() { return err_; }

 private:
  const Flags& flags_;
  std::istream& in_;
  std::ostream& err_;
  RunConfig config_;
  LatticeCatalog catalog_;
  EnumerationOptions options_;
};

std::string matrix_text(const IntMatrix& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += i == 0 ? "[" : ",[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j == 0 ? "" : ",") + std::to_string(m(i, j));
    s += "]";
  }
  return s + "]";
}

std::string expansion_table(const AnyExpansion& any) {
  std::ostringstream out;
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        constexpr bool jacobi = std::is_same_v<E, JacobiExpansion>;
        out << "# kind " << (jacobi ? "jacobi" : "siegel") << "  genus " << e.genus() << "  weight " << e.weight()
            << "  bound " << e.bound();
        if constexpr (jacobi) out << "  index_gram_doubled " << matrix_text(e.index().doubled());
        out << "  terms " << e.size() << "\n";
        for (std::size_t i = 0; i < e.size(); ++i) {
          out << matrix_text(doubled_from_key(e.terms().key(i), e.genus()));
          if constexpr (jacobi) out << "  " << matrix_text(e.r_index(i));
          out << "  " << to_decimal(e.terms().coefficient(i)) << "\n";
        }
      },
      any);
  return out.str();
}

std::string json_table(const ordered_json& doc) {
  std::ostringstream out;
  for (const auto& [key, value] : doc.items()) out << key << "  " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
  return out.str();
}

std::string render(const Session& session, const AnyExpansion& e) {
  return session.table() ? expansion_table(e) : serialize(e);
}

std::string render(const Session& session, const ordered_json& doc) {
  return session.table() ? json_table(doc) : doc.dump(2) + "\n";
}

ordered_json complex_json(Complex c) {
  ordered_json v;
  v["re"] = c.real();
  v["im"] = c.imag();
  return v;
}

// ---------------------------------------------------------------------------

std::string lattice_info(Session& s) {
  const EvenLattice l = s.lattice();
  const std::int64_t norm_bound = 2 * static_cast<std::int64_t>(s.bound());
  ordered_json doc;
  doc["name"] = l.name();
  doc["rank"] = l.rank();
  doc["determinant"] = to_decimal(l.determinant());
  doc["even_unimodular"] = is_even_unimodular(l);
  doc["min_norm"] = min_norm(l);
  ordered_json counts = ordered_json::object();
  for (const auto& [norm, count] : count_vectors_by_norm(l, norm_bound).counts) counts[std::to_string(norm)] = to_decimal(count);
  doc["norm_counts"] = counts;
  return render(s, doc);
}

std::vector<SiegelExpansion> siegel_inputs(Session& s, std::size_t lo, std::size_t hi) {
  std::vector<SiegelExpansion> out;
  for (const std::string& text : s.inputs(lo, hi)) out.push_back(deserialize_siegel(text));
  return out;
}

std::string verify_stable_cmd(Session& s, const std::string& kind, int& exit_code) {
  StableFamilyReport report;
  if (kind == "siegel") {
    std::vector<SiegelExpansion> family;
    const EvenLattice l = s.lattice();
    for (int g = 0; g <= s.max_genus(); ++g) family.push_back(siegel_theta(l, g, s.bound(), s.options()));
    report = verify_stable(std::span<const SiegelExpansion>(family));
  } else if (kind == "jacobi") {
    std::vector<JacobiExpansion> family;
    const JacobiIndex index = s.index();
    for (int g = 0; g <= s.max_genus(); ++g) family.push_back(jacobi_theta(index, g, s.bound(), s.options()));
    report = verify_stable(std::span<const JacobiExpansion>(family));
  } else {
    throw UsageError("--kind must be siegel or jacobi");
  }
  if (!report.passed()) exit_code = kVerificationFailed;
  return report.to_json();
}

std::string verify_stable_files(const std::vector<std::string>& texts, int& exit_code) {
  std::vector<AnyExpansion> parsed;
  for (const std::string& t : texts) parsed.push_back(deserialize(t));
  std::sort(parsed.begin(), parsed.end(), [](const AnyExpansion& a, const AnyExpansion& b) {
    return std::visit([](const auto& x) { return x.genus(); }, a) < std::visit([](const auto& x) { return x.genus(); }, b);
  });
  StableFamilyReport report;
  if (std::holds_alternative<SiegelExpansion>(parsed.front())) {
    std::vector<SiegelExpansion> family;
    for (auto& e : parsed) {
      if (!std::holds_alternative<SiegelExpansion>(e)) throw UsageError("family mixes Siegel and Jacobi expansions");
      family.push_back(std::get<SiegelExpansion>(e));
    }
    report = verify_stable(std::span<const SiegelExpansion>(family));
  } else {
    std::vector<JacobiExpansion> family;
    for (auto& e : parsed) {
      if (!std::holds_alternative<JacobiExpansion>(e)) throw UsageError("family mixes Siegel and Jacobi expansions");
      family.push_back(std::get<JacobiExpansion>(e));
    }
    report = verify_stable(std::span<const JacobiExpansion>(family));
  }
  if (!report.passed()) exit_code = kVerificationFailed;
  return report.to_json();
}

std::string eval_cmd(Session& s, const Flags& flags) {
  ordered_json doc;
  if (!flags.lattice.empty() && flags.inputs.size() == 1) {
    const SiegelJacobiPoint point = parse_point(s.inputs(1, 1)[0]);
    const int g = flags.genus.value_or(point.genus());
    const std::int64_t norm_bound = 2 * static_cast<std::int64_t>(s.bound());
    doc["value"] = complex_json(eval_theta_direct(s.lattice(), g, point, norm_bound, s.options()));
    doc["norm_bound"] = norm_bound;
    return render(s, doc);
  }
  const std::vector<std::string> texts = s.inputs(2, 2);
  const AnyExpansion e = deserialize(texts[0]);
  const SiegelJacobiPoint point = parse_point(texts[1]);
  const EvalResult r = std::visit(
      [&](const auto& x) -> EvalResult {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, SiegelExpansion>)
          return eval_siegel_expansion(x, point);
        else
          return eval_jacobi_expansion(x, point);
      },
      e);
  doc["value"] = complex_json(r.value);
  doc["tail"] = r.tail;
  return render(s, doc);
}

std::string check_inversion_cmd(Session& s, int& exit_code) {
  const SiegelJacobiPoint point = parse_point(s.inputs(1, 1)[0]);
  if (point.genus() != 1) throw UsageError("check inversion takes a genus-1 point");
  const double tol = s.tol();
  const InversionReport r = check_inversion_genus1(s.lattice(), point.tau()(0, 0), tol, s.options());
  ordered_json doc;
  doc["lhs"] = complex_json(r.lhs);
  doc["rhs"] = complex_json(r.rhs);
  doc["residual"] = r.residual;
  doc["norm_bound"] = r.norm_bound;
  doc["tail_estimate"] = r.tail_estimate;
  doc["tol"] = tol;
  doc["pass"] = r.residual < tol;
  if (!(r.residual < tol)) exit_code = kVerificationFailed;
  return render(s, doc);
}

void write_output(const Flags& flags, const std::string& text, std::ostream& out) {
  if (flags.out.empty() || flags.out == "-") {
    out << text;
    return;
  }
  std::ofstream file(flags.out, std::ios::binary);
  if (!file) throw UsageError("cannot write " + flags.out);
  file << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Flags flags;
  CLI::App app{"Fourier expansions of Siegel and Jacobi theta series of even unimodular lattices", "stable_theta"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--lattice", flags.lattice, "Catalog lattice or direct sum such as E8+E8");
  app.add_option("--index-lattice", flags.index_lattice, "Lattice whose Gram matrix is 2M");
  app.add_option("--genus", flags.genus, "Genus g");
  app.add_option("--bound", flags.bound, "Trace bound N");
  app.add_option("--max-genus", flags.max_genus, "Largest genus of a family");
  app.add_option("--kind", flags.kind, "siegel or jacobi");
  app.add_option("--p", flags.p, "First lattice of a pair");
  app.add_option("--q", flags.q, "Second lattice of a pair");
  app.add_option("--c-matrix", flags.c_matrix, "JSON integer matrix c (2k x h)");
  app.add_option("--input", flags.inputs, "Expansion or point document; - for stdin")->take_all();
  app.add_option("--out", flags.out, "Output path (default stdout)");
  app.add_option("--format", flags.format, "json or table")->check(CLI::IsMember({"json", "table"}));
  app.add_option("--tol", flags.tol, "Numeric tolerance");
  app.add_option("--threads", flags.threads, "Worker threads");
  app.add_option("--config", flags.config, "JSON config file (default $STABLE_THETA_CONFIG)");

  auto group = [&](const char* name, const char* help) {
    CLI::App* g = app.add_subcommand(name, help);
    g->fallthrough();
    return g;
  };
  CLI::App* lattice_cmd = group("lattice", "Lattice queries");
  CLI::App* lattice_info_cmd = lattice_cmd->add_subcommand("info", "Rank, determinant, minimum and norm counts");
  CLI::App* theta_cmd = group("theta", "Theta series expansions");
  CLI::App* theta_siegel = theta_cmd->add_subcommand("siegel", "theta_{L,g}");
  CLI::App* theta_jacobi = theta_cmd->add_subcommand("jacobi", "vartheta_{2M}^{[g]}");
  CLI::App* theta_sc_cmd = theta_cmd->add_subcommand("sc", "vartheta_{S,c}^{(g)}");
  CLI::App* igusa_cmd = group("igusa", "theta_{E8+E8,g} - theta_{D16plus,g}");
  CLI::App* diff_cmd = group("diff", "theta_{P,g} - theta_{Q,g}");
  CLI::App* schottky_cmd = group("schottky-jacobi", "(theta_Q - theta_P) * vartheta_{2M}");
  CLI::App* op_cmd = group("op", "Degree-lowering operators");
  CLI::App* op_phi = op_cmd->add_subcommand("phi", "Siegel Phi-operator");
  CLI::App* op_psi = op_cmd->add_subcommand("psi", "Siegel-Jacobi Psi-operator");
  CLI::App* product_cmd = group("product", "Siegel expansion times Jacobi expansion");
  CLI::App* verify_cmd = group("verify", "Exact verifications");
  CLI::App* verify_stable_sub = verify_cmd->add_subcommand("stable", "Phi/Psi stability of a family");
  CLI::App* verify_singular = verify_cmd->add_subcommand("singular", "Singular support of a Jacobi expansion");
  CLI::App* check_cmd = group("check", "Conditions and numeric checks");
  CLI::App* check_pair = check_cmd->add_subcommand("pair", "mu condition and low-norm case of a lattice pair");
  CLI::App* check_inversion = check_cmd->add_subcommand("inversion", "Genus-1 inversion residual");
  CLI::App* eval_cmd_app = group("eval", "Evaluate an expansion or a direct theta sum at a point");
  for (CLI::App* parent : {lattice_cmd, theta_cmd, op_cmd, verify_cmd, check_cmd}) {
    parent->require_subcommand(1, 1);
    for (CLI::App* child : parent->get_subcommands({})) child->fallthrough();
  }

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  int exit_code = kSuccess;
  try {
    Session s(flags, in, err);
    std::string text;
    if (lattice_info_cmd->parsed()) {
      text = lattice_info(s);
    } else if (theta_siegel->parsed()) {
      text = render(s, siegel_theta(s.lattice(), s.genus(), s.bound(), s.options()));
    } else if (theta_jacobi->parsed()) {
      text = render(s, jacobi_theta(s.index(), s.genus(), s.bound(), s.options()));
    } else if (theta_sc_cmd->parsed()) {
      text = render(s, theta_sc(s.lattice(), s.c_matrix(), s.genus(), s.bound(), s.options()));
    } else if (igusa_cmd->parsed()) {
      text = render(s, igusa_form(s.genus(), s.bound(), s.options()));
    } else if (diff_cmd->parsed()) {
      text = render(s, theta_difference(s.p(), s.q(), s.genus(), s.bound(), s.options()));
    } else if (schottky_cmd->parsed()) {
      const SchottkyCandidate c = schottky_jacobi_candidate(s.p(), s.q(), s.index(), s.genus(), s.bound(), s.options());
      if (c.hypothesis_warning)
        s.warn() << "warning: m/mu <= 8 fails for this pair; the expansion is computed anyway\n";
      text = render(s, c.form);
    } else if (op_phi->parsed()) {
      text = render(s, siegel_phi(siegel_inputs(s, 1, 1)[0]));
    } else if (op_psi->parsed()) {
      text = render(s, siegel_jacobi_psi(deserialize_jacobi(s.inputs(1, 1)[0])));
    } else if (product_cmd->parsed()) {
      const std::vector<std::string> texts = s.inputs(2, 2);
      text = render(s, shimura_product(deserialize_siegel(texts[0]), deserialize_jacobi(texts[1])));
    } else if (verify_stable_sub->parsed()) {
      if (!flags.inputs.empty())
        text = verify_stable_files(s.inputs(1, flags.inputs.size()), exit_code);
      else
        text = verify_stable_cmd(s, flags.kind, exit_code);
    } else if (verify_singular->parsed()) {
      const JacobiExpansion f = deserialize_jacobi(s.inputs(1, 1)[0]);
      const SingularReport r = singular_support_check(f);
      ordered_json doc;
      doc["all_singular"] = r.all_singular;
      doc["witness"] = r.witness ? ordered_json(canonical_key(*r.witness, f.genus())) : ordered_json(nullptr);
      text = render(s, doc);
      if (!r.all_singular) exit_code = kVerificationFailed;
    } else if (check_pair->parsed()) {
      text = pair_condition(s.p(), s.q()).to_json();
      if (s.table()) text = json_table(ordered_json::parse(text));
    } else if (check_inversion->parsed()) {
      text = check_inversion_cmd(s, exit_code);
    } else if (eval_cmd_app->parsed()) {
      text = eval_cmd(s, flags);
    }
    write_output(flags, text, out);
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kBudgetExceeded;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return exit_code;
}

}  // namespace stheta::cli
