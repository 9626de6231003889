#include "dsd/line_integral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dsd/errors.hpp"
#include "dsd/quadrature.hpp"

namespace dsd::quad {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvPhi = 0.6180339887498948482;

double safe_log_f(const LogIntegrand& g, double u) {
  const double v = g.log_f(u);
  if (std::isnan(v)) {
    std::ostringstream os;
    os << "log-integrand is NaN at u=" << u;
    throw NumericalError("line integral: invalid integrand", os.str());
  }
  return v;
}

// Walks outward from the peak with doubling offsets and returns the visited
// points (ordered away from the peak) and whether an exponential tail remains
// beyond the last point.
struct SideWalk {
  std::vector<double> points;
  bool exponential_tail = false;
};

SideWalk walk_side(const LogIntegrand& g, double peak, double fmax, double direction,
                   double window_edge, double bound, double rate, double step,
                   const LineOptions& opt) {
  SideWalk walk;
  const bool exponential = std::isfinite(rate);
  const double drop = exponential ? opt.core_drop : opt.tail_drop;
  double offset = step / 8.0;
  for (int iter = 0; iter < 400; ++iter) {
    double u = peak + direction * offset;
    if (direction * (u - bound) >= 0.0) {
      walk.points.push_back(bound);
      return walk;
    }
    if (exponential && direction * (u - window_edge) >= 0.0) {
      // Past the scan window the integrand is asymptotic; hand over to the
      // tail map unless the window edge coincides with the peak itself.
      if (direction * (window_edge - peak) > 0.0) walk.points.push_back(window_edge);
      else walk.points.push_back(u);
      walk.exponential_tail = true;
      return walk;
    }
    walk.points.push_back(u);
    if (safe_log_f(g, u) < fmax - drop) {
      walk.exponential_tail = exponential;
      return walk;
    }
    offset *= 2.0;
  }
  throw NumericalError("line integral: tail walk did not terminate",
                       "peak=" + std::to_string(peak) + " direction=" + std::to_string(direction));
}

double exponential_tail(const LogIntegrand& g, double edge, double rate, double direction,
                        double fmax, double abs_tol) {
  // y = exp(-direction * rate * (u - edge)) maps the tail beyond `edge` onto (0, 1].
  auto h = [&](double y) {
    const double u = edge - direction * std::log(y) / rate;
    const double lf = safe_log_f(g, u);
    if (lf == -kInf) return 0.0;
    return std::exp(lf - fmax - std::log(y)) / rate;
  };
  QuadOptions qo;
  qo.abs_tol = abs_tol;
  qo.rel_tol = 1e-10;
  qo.max_intervals = 2000;
  const auto r = integrate(h, 0.0, 1.0, qo);
  if (!r.converged && r.abs_error > std::max(1e3 * abs_tol, 1e-8 * std::abs(r.value))) {
    std::ostringstream os;
    os << "edge=" << edge << " rate=" << rate << " value=" << r.value << " err=" << r.abs_error;
    throw NumericalError("line integral: tail quadrature did not converge", os.str());
  }
  return r.value;
}

}  // namespace

Peak find_peak(const LogIntegrand& g, const ScanWindow& window, double lower, double upper) {
  double lo = std::max(window.lo, lower);
  double hi = std::min(window.hi, upper);
  if (lo > hi) {
    // Window lies outside [lower, upper]: the peak of the restricted
    // integrand sits on the nearest limit.
    lo = hi = (upper < window.lo) ? upper : lower;
  }
  const double step = window.step > 0.0 ? window.step : 1.0;
  const double cells = std::ceil((hi - lo) / step);
  if (!(cells <= 1e6)) {
    std::ostringstream os;
    os << "window [" << lo << ", " << hi << "] step " << step;
    throw NumericalError("line integral: scan window too wide", os.str());
  }
  const auto n = static_cast<std::size_t>(cells);
  Peak best;
  std::size_t best_i = 0;
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    grid[i] = (n == 0) ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    const double v = safe_log_f(g, grid[i]);
    if (v > best.log_value) {
      best = {grid[i], v};
      best_i = i;
    }
  }
  if (best.log_value == -kInf || n == 0) return best;

  // Golden-section refinement on the bracketing grid cell pair.
  double a = grid[best_i == 0 ? 0 : best_i - 1];
  double b = grid[std::min(best_i + 1, n)];
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = safe_log_f(g, x1);
  double f2 = safe_log_f(g, x2);
  for (int it = 0; it < 80 && (b - a) > 1e-10 * (1.0 + std::abs(a)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = safe_log_f(g, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = safe_log_f(g, x1);
    }
  }
  if (f1 > best.log_value) best = {x1, f1};
  if (f2 > best.log_value) best = {x2, f2};
  return best;
}

double log_integrate(const LogIntegrand& g, const ScanWindow& window, double lower, double upper,
                     const LineOptions& opt) {
  if (!(upper > lower)) return -kInf;
  const Peak peak = find_peak(g, window, lower, upper);
  if (peak.log_value == -kInf) return -kInf;
  if (peak.log_value == kInf) throw NumericalError("line integral: integrand overflow");
  const double fmax = peak.log_value;
  const double step = window.step > 0.0 ? window.step : 1.0;

  const SideWalk left =
      walk_side(g, peak.location, fmax, -1.0, window.lo, lower, g.left_rate, step, opt);
  const SideWalk right =
      walk_side(g, peak.location, fmax, +1.0, window.hi, upper, g.right_rate, step, opt);

  std::vector<double> bp(left.points.rbegin(), left.points.rend());
  if (bp.empty() || peak.location > bp.back()) bp.push_back(peak.location);
  for (double u : right.points) {
    if (u > bp.back()) bp.push_back(u);
  }

  auto scaled = [&](double u) {
    const double lf = safe_log_f(g, u);
    return lf == -kInf ? 0.0 : std::exp(lf - fmax);
  };
  double core = 0.0;
  if (bp.size() >= 2) {
    QuadOptions qo;
    qo.rel_tol = opt.rel_tol;
    qo.max_intervals = opt.max_intervals;
    const auto r = integrate(scaled, bp, qo);
    if (!r.converged && r.abs_error > 1e-9 * std::abs(r.value)) {
      std::ostringstream os;
      os << "core [" << bp.front() << ", " << bp.back() << "] value=" << r.value
         << " err=" << r.abs_error << " intervals=" << r.intervals;
      throw NumericalError("line integral: core quadrature did not converge", os.str());
    }
    core = r.value;
  }

  const double tail_tol = std::max(core, 1e-300) * opt.rel_tol * 0.1;
  double tails = 0.0;
  if (left.exponential_tail) {
    tails += exponential_tail(g, bp.front(), g.left_rate, -1.0, fmax, tail_tol);
  }
  if (right.exponential_tail) {
    tails += exponential_tail(g, bp.back(), g.right_rate, +1.0, fmax, tail_tol);
  }
  const double total = core + tails;
  if (!(total > 0.0)) return -kInf;
  return fmax + std::log(total);
}

// ---------------------------------------------------------------------------

LineDistribution::LineDistribution(LogIntegrand log_density, ScanWindow window)
    : LineDistribution(std::move(log_density), window, Options{}) {}

LineDistribution::LineDistribution(LogIntegrand log_density, ScanWindow window, Options options)
    : integrand_(std::move(log_density)), window_(window), options_(options) {
  log_total_ = log_integrate(integrand_, window_, -kInf, kInf, options_.line);
  if (!std::isfinite(log_total_)) {
    throw NumericalError("distribution: total mass is not finite",
                         "log mass=" + std::to_string(log_total_));
  }
  mode_ = find_peak(integrand_, window_).location;
  build_table();
}

double LineDistribution::density(double u) const {
  const double lf = integrand_.log_f(u);
  return lf == -kInf ? 0.0 : std::exp(lf - log_total_);
}

double LineDistribution::segment_mass(double a, double b) const {
  if (!(b > a)) return 0.0;
  QuadOptions qo;
  qo.abs_tol = 1e-17;
  qo.rel_tol = 1e-13;
  qo.max_intervals = 500;
  const auto r = integrate([this](double u) { return density(u); }, a, b, qo);
  if (!r.converged && r.abs_error > 1e-12) {
    std::ostringstream os;
    os << "segment [" << a << ", " << b << "] value=" << r.value << " err=" << r.abs_error;
    throw NumericalError("distribution: segment quadrature did not converge", os.str());
  }
  return r.value;
}

namespace {

struct HermiteSlopes {
  double left;
  double right;
};

// Fritsch-Carlson limiter: keeps the cubic monotone on the segment.
HermiteSlopes limit_slopes(double mass, double width, double d0, double d1) {
  const double secant = mass / width;
  if (!(secant > 0.0)) return {0.0, 0.0};
  const double a = d0 / secant;
  const double b = d1 / secant;
  const double s = a * a + b * b;
  if (s <= 9.0) return {d0, d1};
  const double tau = 3.0 / std::sqrt(s);
  return {tau * d0, tau * d1};
}

// Cumulative mass at fraction x of a segment whose total mass is `mass`.
double hermite_partial(double x, double mass, double width, HermiteSlopes s) {
  const double x2 = x * x;
  const double x3 = x2 * x;
  const double h10 = x3 - 2.0 * x2 + x;
  const double h01 = -2.0 * x3 + 3.0 * x2;
  const double h11 = x3 - x2;
  return mass * h01 + width * (s.left * h10 + s.right * h11);
}

double hermite_partial_derivative(double x, double mass, double width, HermiteSlopes s) {
  const double x2 = x * x;
  const double d10 = 3.0 * x2 - 4.0 * x + 1.0;
  const double d01 = -6.0 * x2 + 6.0 * x;
  const double d11 = 3.0 * x2 - 2.0 * x;
  return mass * d01 + width * (s.left * d10 + s.right * d11);
}

}  // namespace

void LineDistribution::build_table() {
  const double log_tail = std::log(options_.table_tail);
  auto log_cdf_at = [this](double u) {
    return log_integrate(integrand_, window_, -kInf, u, options_.line) - log_total_;
  };
  auto log_sf_at = [this](double u) {
    return log_integrate(integrand_, window_, u, kInf, options_.line) - log_total_;
  };

  double u_lo = mode_;
  double log_f_lo = 0.0;
  for (double offset = 1.0;; offset *= 1.5) {
    u_lo = mode_ - offset;
    log_f_lo = log_cdf_at(u_lo);
    if (log_f_lo < log_tail) break;
    if (offset > 1e6) throw NumericalError("distribution: left tail search failed");
  }
  double u_hi = mode_;
  double log_s_hi = 0.0;
  for (double offset = 1.0;; offset *= 1.5) {
    u_hi = mode_ + offset;
    log_s_hi = log_sf_at(u_hi);
    if (log_s_hi < log_tail) break;
    if (offset > 1e6) throw NumericalError("distribution: right tail search failed");
  }

  const double span = (u_hi - u_lo) / options_.initial_step;
  if (!(span <= static_cast<double>(options_.max_nodes))) {
    std::ostringstream os;
    os << "table range [" << u_lo << ", " << u_hi << "] needs " << span << " initial cells, limit "
       << options_.max_nodes;
    throw NumericalError("distribution: tails too heavy for the CDF table", os.str());
  }
  const auto n0 = static_cast<std::size_t>(std::ceil(span));
  struct Segment {
    double a, b, mass, da, db;
  };
  std::vector<Segment> work;
  std::vector<Segment> done;
  {
    double prev_u = u_lo;
    double prev_d = density(u_lo);
    for (std::size_t i = 1; i <= n0; ++i) {
      const double u = (i == n0) ? u_hi : u_lo + (u_hi - u_lo) * static_cast<double>(i) / n0;
      const double d = density(u);
      work.push_back({prev_u, u, segment_mass(prev_u, u), prev_d, d});
      prev_u = u;
      prev_d = d;
    }
  }
  std::reverse(work.begin(), work.end());
  std::size_t node_budget = options_.max_nodes;
  while (!work.empty()) {
    const Segment seg = work.back();
    work.pop_back();
    const double width = seg.b - seg.a;
    const double mid = 0.5 * (seg.a + seg.b);
    const double left_mass = segment_mass(seg.a, mid);
    const auto slopes = limit_slopes(seg.mass, width, seg.da, seg.db);
    const double predicted = hermite_partial(0.5, seg.mass, width, slopes);
    const bool ok = std::abs(predicted - left_mass) <= options_.table_tol;
    if (ok || node_budget == 0 || width < 1e-9) {
      done.push_back(seg);
      continue;
    }
    --node_budget;
    const double dm = density(mid);
    const double right_mass = std::max(0.0, seg.mass - left_mass);
    work.push_back({mid, seg.b, right_mass, dm, seg.db});
    work.push_back({seg.a, mid, left_mass, seg.da, dm});
  }

  const std::size_t n = done.size();
  nodes_.resize(n + 1);
  cdf_.resize(n + 1);
  sf_.resize(n + 1);
  dens_.resize(n + 1);
  slope_.resize(2 * n);
  cdf_[0] = std::exp(log_f_lo);
  sf_[n] = std::exp(log_s_hi);
  nodes_[0] = done.front().a;
  dens_[0] = done.front().da;
  for (std::size_t i = 0; i < n; ++i) {
    nodes_[i + 1] = done[i].b;
    dens_[i + 1] = done[i].db;
    cdf_[i + 1] = cdf_[i] + done[i].mass;
    const auto s = limit_slopes(done[i].mass, done[i].b - done[i].a, done[i].da, done[i].db);
    slope_[2 * i] = s.left;
    slope_[2 * i + 1] = s.right;
  }
  for (std::size_t i = n; i-- > 0;) sf_[i] = sf_[i + 1] + done[i].mass;
}

double LineDistribution::cdf(double u) const {
  if (std::isnan(u)) throw DomainError("cdf: NaN argument");
  if (u == -kInf) return 0.0;
  if (u == kInf) return 1.0;
  if (u <= nodes_.front()) {
    return std::exp(log_integrate(integrand_, window_, -kInf, u, options_.line) - log_total_);
  }
  if (u >= nodes_.back()) return 1.0 - sf(u);
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), u);
  const auto i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double mid = 0.5 * (nodes_[i] + nodes_[i + 1]);
  double value = (u <= mid) ? cdf_[i] + segment_mass(nodes_[i], u)
                            : cdf_[i + 1] - segment_mass(u, nodes_[i + 1]);
  return std::clamp(value, cdf_[i], cdf_[i + 1]);
}

double LineDistribution::sf(double u) const {
  if (std::isnan(u)) throw DomainError("sf: NaN argument");
  if (u == -kInf) return 1.0;
  if (u == kInf) return 0.0;
  if (u >= nodes_.back()) {
    return std::exp(log_integrate(integrand_, window_, u, kInf, options_.line) - log_total_);
  }
  if (u <= nodes_.front()) return 1.0 - cdf(u);
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), u);
  const auto i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double mid = 0.5 * (nodes_[i] + nodes_[i + 1]);
  double value = (u >= mid) ? sf_[i + 1] + segment_mass(u, nodes_[i + 1])
                            : sf_[i] - segment_mass(nodes_[i], u);
  return std::clamp(value, sf_[i + 1], sf_[i]);
}

double LineDistribution::hermite_cdf(std::size_t seg, double u) const {
  const double width = nodes_[seg + 1] - nodes_[seg];
  const double mass = cdf_[seg + 1] - cdf_[seg];
  const double x = (u - nodes_[seg]) / width;
  return cdf_[seg] + hermite_partial(x, mass, width, {slope_[2 * seg], slope_[2 * seg + 1]});
}

double LineDistribution::table_quantile(double prob) const {
  if (!(prob > 0.0)) return -kInf;
  if (!(prob < 1.0)) return kInf;
  const std::size_t n = nodes_.size() - 1;
  if (prob < cdf_.front()) {
    // Power-law tail of s = exp(u): log F is linear in u with slope f/F.
    const double rate = dens_.front() / cdf_.front();
    return nodes_.front() + std::log(prob / cdf_.front()) / rate;
  }
  const double upper = 1.0 - prob;
  if (upper < sf_.back()) {
    const double rate = dens_.back() / sf_.back();
    return nodes_.back() - std::log(upper / sf_.back()) / rate;
  }
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), prob);
  std::size_t seg = (it == cdf_.begin()) ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
  seg = std::min(seg, n - 1);
  const double width = nodes_[seg + 1] - nodes_[seg];
  const double mass = cdf_[seg + 1] - cdf_[seg];
  if (!(mass > 0.0)) return nodes_[seg];
  const HermiteSlopes s{slope_[2 * seg], slope_[2 * seg + 1]};
  const double target = std::clamp(prob - cdf_[seg], 0.0, mass);
  double a = 0.0;
  double b = 1.0;
  double x = target / mass;
  for (int it2 = 0; it2 < 60; ++it2) {
    const double h = hermite_partial(x, mass, width, s) - target;
    if (h > 0.0) b = x;
    else a = x;
    const double dh = hermite_partial_derivative(x, mass, width, s);
    double next = (dh > 0.0) ? x - h / dh : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - x) < 1e-15) {
      x = next;
      break;
    }
    x = next;
  }
  return nodes_[seg] + x * width;
}

double LineDistribution::quantile(double prob) const {
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile: probability outside [0, 1]");
  if (prob == 0.0) return -kInf;
  if (prob == 1.0) return kInf;
  const bool use_sf = prob > 0.5;
  const double target = use_sf ? 1.0 - prob : prob;
  auto residual = [&](double u) { return use_sf ? target - sf(u) : cdf(u) - target; };

  double u = table_quantile(prob);
  // Bracket [a, b] with residual(a) < 0 < residual(b).
  double a = u - 1.0;
  double b = u + 1.0;
  for (double w = 1.0; residual(a) > 0.0; w *= 2.0) {
    a = u - w;
    if (w > 1e6) throw NumericalError("quantile: lower bracket not found");
  }
  for (double w = 1.0; residual(b) < 0.0; w *= 2.0) {
    b = u + w;
    if (w > 1e6) throw NumericalError("quantile: upper bracket not found");
  }
  u = std::clamp(u, a, b);
  for (int it = 0; it < 100; ++it) {
    const double r = residual(u);
    if (r == 0.0) return u;
    if (r > 0.0) b = u;
    else a = u;
    const double d = density(u);
    double next = (d > 0.0) ? u - r / d : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - u) <= 1e-14 * (1.0 + std::abs(u))) return next;
    u = next;
  }
  return u;
}

}  // namespace dsd::quad
