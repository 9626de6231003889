#include "dsd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "dsd/errors.hpp"
#include "dsd/line_integral.hpp"
#include "dsd/monte_carlo.hpp"
#include "dsd/specfun.hpp"
#include "dsd/structure.hpp"

namespace dsd {
namespace {

using LogPdf = std::function<double(double)>;

double total_mass(const LogPdf& log_pdf, double left_rate, double right_rate, double centre) {
  quad::LogIntegrand g;
  g.log_f = [&](double u) { return u + log_pdf(std::exp(u)); };
  g.left_rate = left_rate;
  g.right_rate = right_rate;
  return std::exp(quad::log_integrate(g, {centre - 40.0, centre + 40.0, 1.0}));
}

std::string describe(double value, double tol) {
  std::ostringstream os;
  os.precision(6);
  os << "value " << value << " vs tolerance " << tol;
  return os.str();
}

CheckResult bounded(const std::string& fixture, const std::string& name, double value, double tol) {
  const bool ok = std::isfinite(value) && value <= tol;
  return {fixture, name, ok ? CheckStatus::pass : CheckStatus::fail, value, tol, describe(value, tol)};
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::abs(b[i]));
  }
  return worst;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                       static_cast<double>(points - 1));
  }
  return g;
}

// Runs `body`, turning exceptions into a failed check.
template <class F>
CheckResult guarded(const std::string& fixture, const std::string& name, F body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    return {fixture, name, CheckStatus::fail, 0.0, 0.0, std::string(e.what()) + " [" + e.diagnostics() + "]"};
  } catch (const std::exception& e) {
    return {fixture, name, CheckStatus::fail, 0.0, 0.0, e.what()};
  }
}

CheckResult ruben_check(const std::string& fixture, const QfWeights& w, const VerifyOptions& opt) {
  const double tol = 0.01;
  const RubenConfig cfg;
  std::optional<RubenSeries> series;
  try {
    series.emplace(w, cfg);
  } catch (const NumericalError& e) {
    const auto [lo, hi] = std::minmax_element(w.weights.begin(), w.weights.end());
    std::ostringstream os;
    os << "series needs more than " << cfg.max_terms << " terms (weight ratio " << *hi / *lo
       << "); " << e.diagnostics();
    return {fixture, "ruben_vs_mc", CheckStatus::skipped, 0.0, tol, os.str()};
  }
  std::vector<double> q = sample_v(w, 1.0, opt.mc_draws, opt.seed, 65536, opt.threads);
  for (double& x : q) x *= (w.n_predictor - 1.0);
  std::sort(q.begin(), q.end());
  const std::vector<double> grid = mc::order_statistic_grid(q, 2000);
  std::vector<double> cdf(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) cdf[i] = series->cdf(grid[i]);
  return bounded(fixture, "ruben_vs_mc", mc::ks_bound_on_grid(q, grid, cdf), tol);
}

}  // namespace

std::vector<CheckResult> run_verification(const std::vector<VerifyFixture>& fixtures,
                                          const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  for (const auto& f : fixtures) {
    const DsdParams& t = f.params;
    const std::string& id = f.label;
    out.push_back(guarded(id, "parameters", [&] {
      validate(t);
      return CheckResult{id, "parameters", CheckStatus::pass, t.alpha_tilde, t.p, "p <= alpha_tilde"};
    }));
    if (out.back().status != CheckStatus::pass) continue;

    const B2Params base{t.b, t.p, t.q};
    out.push_back(guarded(id, "normalization.b2", [&] {
      const double m = total_mass([&](double s) { return b2_log_pdf(s, base); }, t.p, t.q, std::log(t.b));
      return bounded(id, "normalization.b2", std::abs(m - 1.0), 1e-6);
    }));
    out.push_back(guarded(id, "normalization.twoF0", [&] {
      const double m = std::exp(TwoF0Distribution(t.benchmark()).log_total_mass());
      return bounded(id, "normalization.twoF0", std::abs(m - 1.0), 1e-6);
    }));
    out.push_back(guarded(id, "normalization.dsd", [&] {
      const double m = std::exp(DsdDistribution(t).log_total_mass());
      return bounded(id, "normalization.dsd", std::abs(m - 1.0), 1e-6);
    }));
    out.push_back(guarded(id, "reduction.iid", [&] {
      DsdParams iid = t;
      iid.alpha_tilde = t.alpha;
      iid.beta_tilde = t.beta;
      std::vector<double> lhs, rhs;
      for (double s : log_grid(b2_quantile(1e-3, base), b2_quantile(0.999, base), 50)) {
        lhs.push_back(dsd_pdf(s, iid));
        rhs.push_back(b2_pdf(s, base));
      }
      return bounded(id, "reduction.iid", max_rel(lhs, rhs), 1e-10);
    }));
    out.push_back(guarded(id, "reduction.boundary", [&] {
      // Generic constant and 2F1 evaluated at p == alpha_tilde, bypassing the B2 dispatch.
      DsdParams edge = t;
      edge.alpha_tilde = t.p;
      const B2Params reduced{t.b * t.beta_tilde / t.beta, t.alpha, t.q};
      std::vector<double> lhs, rhs;
      for (double s : log_grid(b2_quantile(1e-3, reduced), b2_quantile(0.999, reduced), 50)) {
        const double z = -edge.b * edge.beta_tilde / (s * edge.beta);
        lhs.push_back(std::exp(dsd_log_constant(edge) - (t.q + 1.0) * std::log(s) +
                               specfun::log_gauss_2f1_negz(t.q + t.alpha, t.q + t.p,
                                                           t.q + edge.alpha_tilde, z)));
        rhs.push_back(b2_pdf(s, reduced));
      }
      return bounded(id, "reduction.boundary", max_rel(lhs, rhs), 1e-10);
    }));
    out.push_back(guarded(id, "tail_law", [&] {
      const double s = 1e6 * t.b * t.beta_tilde / t.beta;
      const double ratio = std::exp((t.q + 1.0) * std::log(s) + dsd_log_pdf(s, t) - dsd_log_constant(t));
      return bounded(id, "tail_law", std::abs(ratio - 1.0), 1e-3);
    }));
    out.push_back(guarded(id, "integral_equation", [&] {
      const auto grid = benchmark_quantile_grid(t.benchmark(), 0.01, 0.99, opt.residual_points);
      const ResidualReport r = integral_equation_residual(t, grid);
      CheckResult c = bounded(id, "integral_equation", r.max_rel_error, 1e-4);
      std::ostringstream os;
      os.precision(6);
      os << c.detail << "; worst at v = " << r.worst_v;
      c.detail = os.str();
      return c;
    }));
    if (f.weights) {
      out.push_back(guarded(id, "ruben_vs_mc", [&] { return ruben_check(id, *f.weights, opt); }));
    }
  }
  return out;
}

std::vector<VerifyFixture> default_fixtures() {
  std::vector<double> x(50);
  for (int i = 0; i < 50; ++i) x[i] = -1.0 + 2.0 * i / 49.0;
  std::vector<VerifyFixture> out;
  for (int m : {5, 20}) {
    const QfWeights w = qf_weights(build_bspline_basis(x, m, 3), build_rw(2, m), true);
    const GammaApprox g = gamma_approx(w);
    VerifyFixture f;
    f.label = "pspline n=50 m=" + std::to_string(m);
    f.params = {24.5, 24.5, g.alpha_tilde, g.beta_tilde, 1.0, 0.5, 1.5};
    f.weights = w;
    out.push_back(std::move(f));
  }
  return out;
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json checks = nlohmann::json::array();
  std::size_t passed = 0, failed = 0, skipped = 0;
  for (const auto& r : results) {
    const char* status = r.status == CheckStatus::pass ? "pass" : r.status == CheckStatus::fail ? "fail" : "skipped";
    passed += r.status == CheckStatus::pass;
    failed += r.status == CheckStatus::fail;
    skipped += r.status == CheckStatus::skipped;
    checks.push_back({{"fixture", r.fixture},
                      {"check", r.name},
                      {"status", status},
                      {"value", r.value},
                      {"tolerance", r.tolerance},
                      {"detail", r.detail}});
  }
  return {{"passed", failed == 0},
          {"counts", {{"pass", passed}, {"fail", failed}, {"skipped", skipped}}},
          {"checks", checks}};
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::none_of(results.begin(), results.end(),
                      [](const CheckResult& r) { return r.status == CheckStatus::fail; });
}

}  // namespace dsd
