#include "dsd/cli.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dsd/elicit.hpp"
#include "dsd/errors.hpp"
#include "dsd/matrix_io.hpp"
#include "dsd/priors.hpp"
#include "dsd/qf.hpp"
#include "dsd/structure.hpp"
#include "dsd/verify.hpp"

namespace dsd::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "1.0.0";
constexpr std::uint64_t kDefaultSeed = 20240101;

struct Manifest {
  json inputs = json::array();
  json outputs = json::array();
  json extra = json::object();
};

class Session {
 public:
  Session(const RunConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log) {
    fs::create_directories(cfg.out);
  }

  const RunConfig& cfg() const { return cfg_; }
  std::ostream& log() { return log_; }
  Manifest& manifest() { return manifest_; }

  std::string input(const std::string& path) {
    manifest_.inputs.push_back({{"path", path}, {"fnv1a64", io::file_digest(path)}});
    return path;
  }

  std::string output(const std::string& name) {
    manifest_.outputs.push_back(name);
    return (fs::path(cfg_.out) / name).string();
  }

  void write_json(const std::string& name, const json& value) {
    std::ofstream out(output(name), std::ios::binary);
    if (!out) throw DomainError("cannot write " + name);
    out << value.dump(2) << '\n';
    log_ << "wrote " << (fs::path(cfg_.out) / name).string() << '\n';
  }

  std::ofstream open_text(const std::string& name) {
    std::ofstream out(output(name), std::ios::binary);
    if (!out) throw DomainError("cannot write " + name);
    log_ << "wrote " << (fs::path(cfg_.out) / name).string() << '\n';
    return out;
  }

  void write_manifest(const json& settings) {
    json m;
    m["tool"] = "dsdprior";
    m["version"] = kVersion;
    m["command"] = command_name(cfg_.command);
    m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                                    std::to_string(BOOST_VERSION / 100 % 1000)},
                      {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR)}};
    m["settings"] = settings;
    m["tolerances"] = {{"quadrature_rel", 1e-13},
                       {"cdf_table", 1e-10},
                       {"null_eigenvalue", "n * eps * lambda_max"},
                       {"ruben_tail", 1e-12},
                       {"ruben_max_terms", 10000}};
    m["inputs"] = manifest_.inputs;
    m["outputs"] = manifest_.outputs;
    if (!manifest_.extra.empty()) m["notes"] = manifest_.extra;
    std::ofstream out((fs::path(cfg_.out) / "manifest.json").string(), std::ios::binary);
    out << m.dump(2) << '\n';
  }

 private:
  const RunConfig& cfg_;
  std::ostream& log_;
  Manifest manifest_;
};

json read_json(Session& s, const std::string& path) {
  if (path.empty()) throw DomainError("--config is required for '" + command_name(s.cfg().command) + "'");
  std::ifstream in(s.input(path));
  if (!in) throw DomainError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError("invalid JSON in " + path + ": " + e.what());
  }
}

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw DomainError(std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

json to_json(const DsdParams& t) {
  return {{"alpha", t.alpha}, {"beta", t.beta}, {"alpha_tilde", t.alpha_tilde},
          {"beta_tilde", t.beta_tilde}, {"b", t.b}, {"p", t.p}, {"q", t.q}};
}

DsdParams params_from_json(const json& root) {
  const json& j = root.contains("params") ? root.at("params") : root;
  DsdParams t{number(j, "alpha"), number(j, "beta"), number(j, "alpha_tilde"), number(j, "beta_tilde"),
              number(j, "b"), number(j, "p"), number(j, "q")};
  validate(t);
  return t;
}

json to_json(const QfWeights& w) {
  return {{"weights", w.weights}, {"n_predictor", w.n_predictor}, {"zero_count", w.zero_count}};
}

QfWeights weights_from_json(const json& root) {
  const json& j = root.contains("weights") && root.at("weights").is_object() ? root.at("weights") : root;
  if (!j.contains("weights") || !j.at("weights").is_array()) throw DomainError("missing 'weights' array");
  QfWeights w;
  w.weights = j.at("weights").get<std::vector<double>>();
  w.n_predictor = static_cast<int>(number(j, "n_predictor"));
  w.zero_count = static_cast<int>(number_or(j, "zero_count", w.n_predictor - static_cast<double>(w.weights.size())));
  return w;
}

StructureSpec load_structure(Session& s) {
  const RunConfig& c = s.cfg();
  if (!c.recipe.empty()) {
    std::istringstream ss(c.recipe);
    std::string kind;
    ss >> kind;
    if (kind == "icar") {
      if (c.edges.empty()) throw DomainError("recipe 'icar' needs --edges");
      StructureSpec k = build_icar(io::read_edge_list(s.input(c.edges), c.nodes));
      return k;
    }
    int n = 0;
    if (!(ss >> n)) throw DomainError("recipe '" + c.recipe + "' needs a size, e.g. 'rw2 100'");
    if (kind == "rw1") return build_rw(1, n, false);
    if (kind == "rw2") return build_rw(2, n, false);
    if (kind == "crw1") return build_rw(1, n, true);
    if (kind == "crw2") return build_rw(2, n, true);
    if (kind == "iid") return {Eigen::MatrixXd::Identity(n, n), 0, "iid n=" + std::to_string(n)};
    throw DomainError("unknown recipe '" + kind + "' (expected rw1, rw2, crw1, crw2, iid, icar)");
  }
  if (!c.structure.empty()) {
    if (c.kappa < 0) throw DomainError("--kappa is required with --structure");
    return {io::read_matrix(s.input(c.structure)), c.kappa, fs::path(c.structure).filename().string()};
  }
  throw DomainError("give --recipe or --structure");
}

DesignMatrix load_design(Session& s, const StructureSpec& k) {
  const std::string& d = s.cfg().design;
  if (d.empty() || d == "identity") return identity_design(static_cast<int>(k.precision.rows()));
  return {io::read_matrix(s.input(d)), DesignKind::basis};
}

ElicitationSpec elicitation_from_json(const json& j, const RunConfig& c, std::optional<int> n_default) {
  ElicitationSpec e;
  if (j.contains("n")) e.n = static_cast<int>(number(j, "n"));
  else if (n_default) e.n = *n_default;
  else throw DomainError("elicitation config needs 'n'");
  e.p = number_or(j, "p", 0.5);
  e.q = number_or(j, "q", 1.5);
  e.pi0 = number_or(j, "pi0", 0.5);
  if (j.contains("c")) {
    e.c = pseudo_variance(UserSupplied{number(j, "c")});
  } else if (j.contains("likelihood")) {
    const json& l = j.at("likelihood");
    const std::string kind = l.value("kind", "");
    if (kind == "gaussian") e.c = pseudo_variance(GaussianLikelihood{number(l, "sample_variance")});
    else if (kind == "logit") e.c = pseudo_variance(BinomialLogit{number(l, "mean")});
    else if (kind == "probit") e.c = pseudo_variance(BinomialProbit{number(l, "mean")});
    else throw DomainError("likelihood kind must be gaussian, logit or probit");
  } else {
    throw DomainError("elicitation config needs 'c' or 'likelihood'");
  }
  e.mc_draws = static_cast<std::size_t>(number_or(j, "mc_draws", 1e6));
  e.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : kDefaultSeed;
  e.chunk_size = static_cast<std::size_t>(number_or(j, "chunk_size", 65536));
  if (c.mc_draws) e.mc_draws = *c.mc_draws;
  if (c.seed) e.seed = *c.seed;
  e.threads = c.threads;
  validate(e);
  return e;
}

json to_json(const ScaleSolution& s) {
  return {{"b", s.b},
          {"std_error", s.std_error},
          {"quantile", s.quantile},
          {"quantile_density", s.quantile_density},
          {"draws", s.draws},
          {"warnings", s.warnings}};
}

json to_json(const ElicitationSpec& e) {
  return {{"n", e.n}, {"p", e.p}, {"q", e.q}, {"pi0", e.pi0}, {"c", e.c},
          {"mc_draws", e.mc_draws}, {"seed", e.seed}, {"chunk_size", e.chunk_size}};
}

std::string csv_row(std::initializer_list<double> values) {
  std::string line;
  for (double v : values) {
    if (!line.empty()) line += ',';
    line += io::format_double(v);
  }
  return line + '\n';
}

// Subcommands -----------------------------------------------------------------

json cmd_structure(Session& s) {
  const StructureSpec k = load_structure(s);
  spectral_split(k);  // validates PSD and kappa
  io::write_matrix_market(s.output("structure.mtx"), k.precision);
  s.write_json("structure.json", {{"label", k.label},
                                  {"n", k.precision.rows()},
                                  {"kappa", k.rank_deficiency},
                                  {"recipe", s.cfg().recipe},
                                  {"matrix", "structure.mtx"}});
  return json::object();
}

json cmd_weights(Session& s) {
  const StructureSpec k = load_structure(s);
  const DesignMatrix z = load_design(s, k);
  const bool constrained = !s.cfg().unconstrained;
  const QfWeights w = qf_weights(z, k, constrained);
  json j = to_json(w);
  j["constrained"] = constrained;
  j["structure"] = k.label;
  j["scale_factor"] = qf_scale_factor(w);
  s.write_json("weights.json", j);
  return json::object();
}

json cmd_approx(Session& s) {
  const std::string path = !s.cfg().weights.empty() ? s.cfg().weights : s.cfg().config;
  const QfWeights w = weights_from_json(read_json(s, path));
  const GammaApprox g = gamma_approx(w);
  const QfMoments m = qf_moments(w, 1.0);
  s.write_json("approx.json", {{"alpha_tilde", g.alpha_tilde},
                               {"beta_tilde", g.beta_tilde},
                               {"mean", m.mean},
                               {"variance", m.variance},
                               {"n_predictor", w.n_predictor}});
  return json::object();
}

json cmd_elicit(Session& s) {
  const ElicitationSpec e = elicitation_from_json(read_json(s, s.cfg().config), s.cfg(), std::nullopt);
  const ScaleSolution sol = solve_scale(e);
  for (const auto& w : sol.warnings) s.log() << "warning: " << w << '\n';
  json j = to_json(sol);
  j["elicitation"] = to_json(e);
  s.write_json("elicit.json", j);
  return {{"seed", e.seed}, {"mc_draws", e.mc_draws}, {"chunk_size", e.chunk_size}};
}

json cmd_prior(Session& s) {
  const DsdParams t = params_from_json(read_json(s, s.cfg().config));
  const std::size_t points = s.cfg().grid_points;
  if (points < 2) throw DomainError("--grid-points must be at least 2");
  const DsdDistribution dist(t);
  const double lo = dist.quantile(0.001);
  const double hi = dist.quantile(0.999);
  auto grid = s.open_text("prior_grid.csv");
  auto sigma = s.open_text("sigma_grid.csv");
  grid << "s,pdf,cdf\n";
  sigma << "sigma,pdf,cdf\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double u = std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                        static_cast<double>(points - 1);
    const double v = std::exp(u);
    const double f = dsd_pdf(v, t);
    const double F = dist.cdf(v);
    grid << csv_row({v, f, F});
    const double sd = std::sqrt(v);
    sigma << csv_row({sd, 2.0 * sd * f, F});
  }
  return {{"grid_points", points}, {"range", {lo, hi}}};
}

json cmd_sample(Session& s) {
  const DsdParams t = params_from_json(read_json(s, s.cfg().config));
  const std::uint64_t seed = s.cfg().seed.value_or(kDefaultSeed);
  const auto draws = dsd_sample(t, s.cfg().count, {seed, 65536, s.cfg().threads});
  auto out = s.open_text("samples.csv");
  out << "sigma2\n";
  for (double d : draws) out << io::format_double(d) << '\n';
  return {{"seed", seed}, {"count", s.cfg().count}, {"chunk_size", 65536}};
}

json cmd_verify(Session& s, bool& passed) {
  std::vector<VerifyFixture> fixtures;
  if (s.cfg().config.empty()) {
    fixtures = default_fixtures();
  } else {
    const json root = read_json(s, s.cfg().config);
    if (!root.contains("fixtures")) throw DomainError("verify config needs a 'fixtures' array");
    for (const json& f : root.at("fixtures")) {
      VerifyFixture fx;
      fx.label = f.value("label", "fixture " + std::to_string(fixtures.size() + 1));
      fx.params = params_from_json(f);
      if (f.contains("weights")) fx.weights = weights_from_json(f.at("weights"));
      fixtures.push_back(std::move(fx));
    }
  }
  VerifyOptions opt;
  opt.seed = s.cfg().seed.value_or(kDefaultSeed);
  opt.mc_draws = s.cfg().mc_draws.value_or(100000);
  opt.threads = s.cfg().threads;
  const auto results = run_verification(fixtures, opt);
  const json report = to_json(results);
  s.write_json("verify.json", report);
  for (const auto& r : results) {
    const char* tag = r.status == CheckStatus::pass ? "PASS" : r.status == CheckStatus::fail ? "FAIL" : "SKIP";
    s.log() << tag << "  " << r.fixture << "  " << r.name << "  " << r.detail << '\n';
  }
  passed = all_passed(results);
  return {{"seed", opt.seed}, {"mc_draws", opt.mc_draws}};
}

json cmd_pipeline(Session& s) {
  const StructureSpec k = load_structure(s);
  const DesignMatrix z = load_design(s, k);
  const json cfg = read_json(s, s.cfg().config);
  const ElicitationSpec e = elicitation_from_json(cfg, s.cfg(), static_cast<int>(z.values.rows()));
  const bool constrained = !s.cfg().unconstrained;
  const DsdBundle bundle = build_dsd_prior(z, k, e, constrained);
  for (const auto& w : bundle.scale.warnings) s.log() << "warning: " << w << '\n';
  json j;
  j["params"] = to_json(bundle.params);
  j["approx"] = {{"alpha_tilde", bundle.approx.alpha_tilde},
                 {"beta_tilde", bundle.approx.beta_tilde},
                 {"mean", bundle.approx.mean()},
                 {"variance", bundle.approx.variance()}};
  j["weights"] = to_json(bundle.weights);
  j["scale"] = to_json(bundle.scale);
  j["elicitation"] = to_json(e);
  j["metadata"] = {{"structure", bundle.structure_label},
                   {"constrained", bundle.constrained},
                   {"weights_fnv1a64", bundle.weights_digest},
                   {"benchmark", "alpha = beta = (n - 1) / 2 with n the number of design rows"},
                   {"quantile_rule", "type 7"},
                   {"bspline_knots", "equally spaced, (m - degree) intervals over the data range, degree extra knots each side"}};
  s.write_json("bundle.json", j);
  return {{"seed", e.seed}, {"mc_draws", e.mc_draws}, {"chunk_size", e.chunk_size}};
}

}  // namespace

std::string command_name(Command c) {
  switch (c) {
    case Command::structure: return "structure";
    case Command::weights: return "weights";
    case Command::approx: return "approx";
    case Command::elicit: return "elicit";
    case Command::prior: return "prior";
    case Command::sample: return "sample";
    case Command::verify: return "verify";
    case Command::pipeline: return "pipeline";
  }
  return "unknown";
}

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    Session s(config, log);
    json settings = {{"threads", config.threads}, {"grid_points", config.grid_points}};
    if (config.seed) settings["seed"] = *config.seed;
    if (config.mc_draws) settings["mc_draws"] = *config.mc_draws;
    if (!config.recipe.empty()) settings["recipe"] = config.recipe;
    if (!config.design.empty()) settings["design"] = config.design;
    if (config.kappa >= 0) settings["kappa"] = config.kappa;
    settings["constrained"] = !config.unconstrained;
    bool passed = true;
    json extra;
    switch (config.command) {
      case Command::structure: extra = cmd_structure(s); break;
      case Command::weights: extra = cmd_weights(s); break;
      case Command::approx: extra = cmd_approx(s); break;
      case Command::elicit: extra = cmd_elicit(s); break;
      case Command::prior: extra = cmd_prior(s); break;
      case Command::sample: extra = cmd_sample(s); break;
      case Command::verify: extra = cmd_verify(s, passed); break;
      case Command::pipeline: extra = cmd_pipeline(s); break;
    }
    for (auto it = extra.begin(); it != extra.end(); ++it) settings[it.key()] = it.value();
    s.write_manifest(settings);
    if (!passed) {
      err << "verification failed: see verify.json\n";
      return 2;
    }
    return 0;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    if (!e.diagnostics().empty()) err << "diagnostics: " << e.diagnostics() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Design-and-structure-dependent priors for variance components", "dsdprior"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::uint64_t seed = 0;
  std::size_t mc_draws = 0;

  const std::vector<std::pair<Command, const char*>> commands = {
      {Command::structure, "Build a structure matrix and write it as Matrix Market"},
      {Command::weights, "Quadratic-form weights of a design/structure pair"},
      {Command::approx, "Moment-matched Gamma approximation from weights"},
      {Command::elicit, "Monte Carlo solve for the scale b"},
      {Command::prior, "Density/CDF grid of a DSD prior on sigma^2 and sigma"},
      {Command::sample, "Draw from a DSD prior"},
      {Command::verify, "Run the invariant battery"},
      {Command::pipeline, "Design + structure + elicitation to a full parameter bundle"}};
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [command, help] : commands) {
    CLI::App* sub = app.add_subcommand(command_name(command), help);
    sub->add_option("--config", cfg.config, "JSON input");
    sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Random seed (u64)");
    sub->add_option("--grid-points", cfg.grid_points, "Grid size for 'prior'")->capture_default_str();
    sub->add_option("--mc-draws", mc_draws, "Monte Carlo draws");
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--recipe", cfg.recipe, "rw1 N | rw2 N | crw1 N | crw2 N | iid N | icar");
    sub->add_option("--edges", cfg.edges, "Edge list for icar (1-based 'i j' lines)");
    sub->add_option("--nodes", cfg.nodes, "Node count for icar (default: largest index)");
    sub->add_option("--design", cfg.design, "'identity' or a matrix file (.mtx or CSV)");
    sub->add_option("--structure", cfg.structure, "Structure matrix file (.mtx or CSV)");
    sub->add_option("--kappa", cfg.kappa, "Rank deficiency of --structure");
    sub->add_flag("--unconstrained", cfg.unconstrained, "Do not apply the sum-to-zero constraints");
    sub->add_option("--count", cfg.count, "Number of samples")->capture_default_str();
    sub->add_option("--weights", cfg.weights, "Weights JSON for 'approx'");
    subs.emplace_back(sub, command);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? 0 : 1;
  }
  for (const auto& [sub, command] : subs) {
    if (sub->parsed()) {
      cfg.command = command;
      if (sub->count("--seed") > 0) cfg.seed = seed;
      if (sub->count("--mc-draws") > 0) cfg.mc_draws = mc_draws;
    }
  }
  return run(cfg, log, err);
}

}  // namespace dsd::cli
