#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "dsd/cli.hpp"
#include "dsd/errors.hpp"
#include "dsd/matrix_io.hpp"
#include "dsd/structure.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("dsd_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

json load(const std::string& path) { return json::parse(slurp(path)); }

struct Result {
  int code;
  std::string log;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dsdprior");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log, err;
  const int code = dsd::cli::main_entry(static_cast<int>(argv.size()), argv.data(), log, err);
  return {code, log.str(), err.str()};
}

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Eigen::MatrixXd awkward_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng) * std::pow(10.0, 40.0 * u(rng));
  m(0, 0) = 1.0 / 3.0;
  m(rows - 1, cols - 1) = std::numeric_limits<double>::denorm_min();
  if (rows > 1) m(1, 0) = -std::numeric_limits<double>::max();
  return m;
}

}  // namespace

// Matrix I/O -------------------------------------------------------------------

TEST(MatrixMarket, ArrayRoundTripIsBitExact) {
  const Eigen::MatrixXd m = awkward_matrix(7, 4, 1);
  std::stringstream ss;
  dsd::io::write_matrix_market(ss, m);
  EXPECT_TRUE(bit_equal(dsd::io::read_matrix_market(ss), m));
}

TEST(MatrixMarket, CoordinateRoundTripIsBitExact) {
  Eigen::MatrixXd m = dsd::build_rw(2, 12, true).precision;
  m(3, 5) = 0.1;
  std::stringstream ss;
  dsd::io::write_matrix_market(ss, m, dsd::io::MatrixFormat::coordinate);
  EXPECT_TRUE(bit_equal(dsd::io::read_matrix_market(ss), m));
}

TEST(MatrixMarket, SymmetricPatternAndComments) {
  std::istringstream sym(
      "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.5\n2 1 -1\n3 3 4\n");
  const Eigen::MatrixXd a = dsd::io::read_matrix_market(sym);
  EXPECT_EQ(a(0, 1), -1.0);
  EXPECT_EQ(a(1, 0), -1.0);
  EXPECT_EQ(a(2, 2), 4.0);
  EXPECT_EQ(a(1, 1), 0.0);

  std::istringstream pat("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n");
  const Eigen::MatrixXd b = dsd::io::read_matrix_market(pat);
  EXPECT_EQ(b(0, 2), 1.0);
  EXPECT_EQ(b(1, 0), 1.0);
  EXPECT_EQ(b.sum(), 2.0);

  std::istringstream arr("%%MatrixMarket matrix array integer general\n2 2\n1\n2\n3\n4\n");
  const Eigen::MatrixXd c = dsd::io::read_matrix_market(arr);
  EXPECT_EQ(c(1, 0), 2.0);  // column-major
  EXPECT_EQ(c(0, 1), 3.0);
}

TEST(MatrixMarket, MalformedInputNamesTheLine) {
  std::istringstream bad_header("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n");
  EXPECT_THROW(dsd::io::read_matrix_market(bad_header), dsd::DomainError);
  std::istringstream out_of_range("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
  try {
    dsd::io::read_matrix_market(out_of_range);
    FAIL() << "expected DomainError";
  } catch (const dsd::DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("3 1 1.0"), std::string::npos) << e.what();
  }
  std::istringstream short_array("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n");
  EXPECT_THROW(dsd::io::read_matrix_market(short_array), dsd::DomainError);
}

TEST(Csv, ReadsRowsAndRejectsRaggedInput) {
  std::istringstream ok("1,2,3\n\n4.5,-6,1e-3\n");
  const Eigen::MatrixXd m = dsd::io::read_csv(ok);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m(1, 2), 1e-3);
  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(dsd::io::read_csv(ragged), dsd::DomainError);
  std::istringstream junk("1,x\n");
  EXPECT_THROW(dsd::io::read_csv(junk), dsd::DomainError);
}

TEST(EdgeList, SymmetricAdjacency) {
  std::istringstream in("# path with a chord\n1 2\n2 3\n% comment\n3 4\n1 3\n");
  const Eigen::MatrixXd a = dsd::io::read_edge_list(in);
  ASSERT_EQ(a.rows(), 4);
  EXPECT_TRUE(a.isApprox(a.transpose()));
  EXPECT_EQ(a.sum(), 8.0);
  EXPECT_EQ(a(0, 2), 1.0);
  std::istringstream padded("1 2\n");
  EXPECT_EQ(dsd::io::read_edge_list(padded, 5).rows(), 5);
  std::istringstream zero("0 1\n");
  EXPECT_THROW(dsd::io::read_edge_list(zero), dsd::DomainError);
}

TEST(Formatting, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t b = bits(rng);
    double x;
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    const double y = std::strtod(dsd::io::format_double(x).c_str(), nullptr);
    ASSERT_EQ(std::memcmp(&x, &y, sizeof x), 0) << dsd::io::format_double(x);
  }
}

TEST(Digest, PublishedFnv1aVectors) {
  TempDir dir;
  spit(dir / "empty", "");
  spit(dir / "a", "a");
  spit(dir / "foobar", "foobar");
  EXPECT_EQ(dsd::io::file_digest(dir / "empty"), "cbf29ce484222325");
  EXPECT_EQ(dsd::io::file_digest(dir / "a"), "af63dc4c8601ec8c");
  EXPECT_EQ(dsd::io::file_digest(dir / "foobar"), "85944171f73967e8");
}

// Command line -----------------------------------------------------------------

TEST(Cli, StructureWritesReadableMatrix) {
  TempDir dir;
  const Result r = cli({"structure", "--recipe", "crw2 10", "--out", dir.str()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Eigen::MatrixXd k = dsd::io::read_matrix(dir / "structure.mtx");
  EXPECT_TRUE(bit_equal(k, dsd::build_rw(2, 10, true).precision));
  const json meta = load(dir / "structure.json");
  EXPECT_EQ(meta.at("kappa"), 1);
  EXPECT_EQ(meta.at("n"), 10);
  const json manifest = load(dir / "manifest.json");
  EXPECT_EQ(manifest.at("command"), "structure");
  EXPECT_TRUE(manifest.contains("tolerances"));
}

TEST(Cli, IdentityWeightsAreUnit) {
  TempDir dir;
  const Result r = cli({"weights", "--recipe", "iid 8", "--design", "identity", "--out", dir.str()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json w = load(dir / "weights.json");
  const auto weights = w.at("weights").get<std::vector<double>>();
  ASSERT_EQ(weights.size(), 7u);
  for (double x : weights) EXPECT_NEAR(x, 1.0, 1e-12);
  EXPECT_EQ(w.at("n_predictor"), 8);
  EXPECT_EQ(w.at("zero_count"), 1);
}

TEST(Cli, StructureFileGivesSameWeightsAsRecipe) {
  TempDir dir;
  ASSERT_EQ(cli({"structure", "--recipe", "rw2 30", "--out", dir.str()}).code, 0);
  TempDir a, b;
  ASSERT_EQ(cli({"weights", "--recipe", "rw2 30", "--out", a.str()}).code, 0);
  ASSERT_EQ(cli({"weights", "--structure", dir / "structure.mtx", "--kappa", "2", "--out", b.str()}).code, 0);
  const auto wa = load(a / "weights.json").at("weights").get<std::vector<double>>();
  const auto wb = load(b / "weights.json").at("weights").get<std::vector<double>>();
  ASSERT_EQ(wa.size(), wb.size());
  EXPECT_EQ(std::memcmp(wa.data(), wb.data(), wa.size() * sizeof(double)), 0);
}

TEST(Cli, ApproxFromWeights) {
  TempDir dir;
  spit(dir / "w.json", R"({"weights": [1, 2, 3], "n_predictor": 4})");
  const Result r = cli({"approx", "--weights", dir / "w.json", "--out", dir.str()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json g = load(dir / "approx.json");
  EXPECT_NEAR(g.at("alpha_tilde").get<double>(), 36.0 / 28.0, 1e-15);
  EXPECT_NEAR(g.at("beta_tilde").get<double>(), 1.5 * 6.0 / 14.0, 1e-15);
}

TEST(Cli, ElicitIsByteIdenticalOnRepeat) {
  TempDir cfg, a, b;
  spit(cfg / "e.json", R"({"n": 366, "likelihood": {"kind": "logit", "mean": 0.25}, "mc_draws": 200000, "seed": 9})");
  ASSERT_EQ(cli({"elicit", "--config", cfg / "e.json", "--out", a.str()}).code, 0);
  ASSERT_EQ(cli({"elicit", "--config", cfg / "e.json", "--out", b.str(), "--threads", "3"}).code, 0);
  EXPECT_EQ(slurp(a / "elicit.json"), slurp(b / "elicit.json"));
  const json j = load(a / "elicit.json");
  EXPECT_NEAR(j.at("elicitation").at("c").get<double>(), 1.0 / (0.25 * 0.75), 1e-12);
  EXPECT_TRUE(j.at("warnings").empty());
}

TEST(Cli, PipelineCircularRw2) {
  TempDir cfg, out;
  spit(cfg / "e.json", R"({"c": 5.16, "pi0": 0.5, "seed": 2024})");
  const Result r = cli({"pipeline", "--recipe", "crw2 366", "--design", "identity", "--config",
                        cfg / "e.json", "--out", out.str()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json bundle = load(out / "bundle.json");
  const double b = bundle.at("params").at("b").get<double>();
  EXPECT_LE(std::abs(b / 26.5 - 1.0), 0.03) << b;
  EXPECT_EQ(bundle.at("params").at("alpha").get<double>(), 182.5);
  EXPECT_EQ(bundle.at("metadata").at("weights_fnv1a64").get<std::string>().size(), 16u);
}

TEST(Cli, PriorAndSampleOutputsAreReproducible) {
  TempDir cfg, a, b;
  spit(cfg / "p.json",
       R"({"params": {"alpha": 24.5, "beta": 24.5, "alpha_tilde": 0.992359, "beta_tilde": 34.6828, "b": 1, "p": 0.5, "q": 1.5}})");
  for (const auto& dir : {a.str(), b.str()}) {
    ASSERT_EQ(cli({"prior", "--config", cfg / "p.json", "--grid-points", "64", "--out", dir}).code, 0);
    ASSERT_EQ(cli({"sample", "--config", cfg / "p.json", "--count", "5000", "--seed", "4", "--out", dir}).code, 0);
  }
  EXPECT_EQ(slurp(a / "prior_grid.csv"), slurp(b / "prior_grid.csv"));
  EXPECT_EQ(slurp(a / "sigma_grid.csv"), slurp(b / "sigma_grid.csv"));
  EXPECT_EQ(slurp(a / "samples.csv"), slurp(b / "samples.csv"));

  std::istringstream grid(slurp(a / "prior_grid.csv"));
  std::string line;
  std::getline(grid, line);
  EXPECT_EQ(line, "s,pdf,cdf");
  int rows = 0;
  double last_cdf = -1.0;
  while (std::getline(grid, line)) {
    ++rows;
    const double cdf = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_GE(cdf, last_cdf);
    last_cdf = cdf;
  }
  EXPECT_EQ(rows, 64);
  EXPECT_NEAR(last_cdf, 0.999, 1e-9);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"bogus"}).code, 1);
  EXPECT_EQ(cli({"structure", "--recipe", "rw9 10", "--out", dir.str()}).code, 1);
  EXPECT_EQ(cli({"weights", "--structure", dir / "missing.mtx", "--kappa", "0", "--out", dir.str()}).code, 1);
  spit(dir / "broken.json", "{\"n\": ");
  EXPECT_EQ(cli({"elicit", "--config", dir / "broken.json", "--out", dir.str()}).code, 1);
  spit(dir / "e.json", R"({"c": 1.0, "p": 1.5, "mc_draws": 20000})");
  const Result existence =
      cli({"pipeline", "--recipe", "rw2 50", "--config", dir / "e.json", "--out", dir.str()});
  EXPECT_EQ(existence.code, 1);
  EXPECT_NE(existence.err.find("1.5"), std::string::npos) << existence.err;
  // Parameters are validated before any check runs.
  spit(dir / "v.json",
       R"({"fixtures": [{"label": "bad", "alpha": 5, "beta": 5, "alpha_tilde": 0.4, "beta_tilde": 1, "b": 1, "p": 0.5, "q": 1.5}]})");
  EXPECT_EQ(cli({"verify", "--config", dir / "v.json", "--out", dir.str()}).code, 1);
  // Valid but with tails too heavy to tabulate: a numerical failure.
  spit(dir / "heavy.json",
       R"({"alpha": 5, "beta": 5, "alpha_tilde": 1, "beta_tilde": 1, "b": 1, "p": 1e-12, "q": 1e-12})");
  const Result heavy = cli({"prior", "--config", dir / "heavy.json", "--out", dir.str()});
  EXPECT_EQ(heavy.code, 2);
  EXPECT_NE(heavy.err.find("diagnostics:"), std::string::npos) << heavy.err;
  // A failing check in the battery also exits 2.
  spit(dir / "vh.json", R"({"fixtures": [{"label": "heavy", "alpha": 5, "beta": 5, "alpha_tilde": 1, "beta_tilde": 1, "b": 1, "p": 1e-12, "q": 1e-12}]})");
  const Result verify = cli({"verify", "--config", dir / "vh.json", "--out", dir.str()});
  EXPECT_EQ(verify.code, 2) << verify.err;
}

TEST(Cli, VerifyDefaultFixturesPass) {
  TempDir dir;
  const Result r = cli({"verify", "--mc-draws", "100000", "--out", dir.str()});
  EXPECT_EQ(r.code, 0) << r.log << r.err;
  const json report = load(dir / "verify.json");
  EXPECT_EQ(report.at("counts").at("fail"), 0);
  EXPECT_GT(report.at("counts").at("pass").get<int>(), 10);
}
