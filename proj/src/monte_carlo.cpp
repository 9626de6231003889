#include "dsd/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "dsd/errors.hpp"

namespace dsd::mc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Engine chunk_engine(std::uint64_t seed, std::uint64_t chunk) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(chunk + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Engine(seq);
}

double uniform_open(Engine& engine) {
  // (k + 0.5) / 2^53 for k in [0, 2^53).
  const std::uint64_t k = engine() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

void for_each_chunk(const ChunkPlan& plan,
                    const std::function<void(std::size_t, std::size_t, Engine&)>& body) {
  if (plan.chunk_size == 0) throw DomainError("for_each_chunk: chunk_size must be positive");
  const std::size_t chunks = (plan.count + plan.chunk_size - 1) / plan.chunk_size;
  const auto run_chunk = [&](std::size_t k) {
    Engine engine = chunk_engine(plan.seed, k);
    const std::size_t begin = k * plan.chunk_size;
    body(begin, std::min(plan.count, begin + plan.chunk_size), engine);
  };
  const std::size_t workers =
      std::min<std::size_t>(chunks, static_cast<std::size_t>(std::max(plan.threads, 1)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < chunks; ++k) run_chunk(k);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < chunks; k += workers) run_chunk(k);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> generate(const ChunkPlan& plan, const std::function<double(Engine&)>& draw) {
  std::vector<double> out(plan.count);
  for_each_chunk(plan, [&](std::size_t begin, std::size_t end, Engine& engine) {
    for (std::size_t i = begin; i < end; ++i) out[i] = draw(engine);
  });
  return out;
}

double gamma_draw(Engine& engine, double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine);
}

Summary summarize(std::span<const double> x) {
  Summary s;
  s.count = x.size();
  if (x.empty()) return s;
  // Welford update.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double v : x) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  s.mean = mean;
  if (x.size() > 1) {
    s.variance = m2 / static_cast<double>(x.size() - 1);
    s.std_error = std::sqrt(s.variance / static_cast<double>(x.size()));
  }
  return s;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DomainError("quantile_sorted: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile_sorted: probability outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double silverman_bandwidth(std::span<const double> sorted) {
  if (sorted.size() < 2) throw DomainError("silverman_bandwidth: need at least two points");
  const double sd = std::sqrt(summarize(sorted).variance);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

double kde_density(std::span<const double> sorted, double x) {
  const double h = silverman_bandwidth(sorted);
  if (!(h > 0.0)) throw DomainError("kde_density: degenerate sample");
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * h);
  const auto last = std::upper_bound(sorted.begin(), sorted.end(), x + 8.0 * h);
  double sum = 0.0;
  for (auto it = first; it != last; ++it) {
    const double z = (x - *it) / h;
    sum += std::exp(-0.5 * z * z);
  }
  return sum / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
}

double ks_one_sample(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_bound_on_grid(std::span<const double> sorted, std::span<const double> grid,
                        std::span<const double> cdf_at_grid) {
  if (grid.size() != cdf_at_grid.size() || grid.empty()) {
    throw DomainError("ks_bound_on_grid: grid and CDF values must be non-empty and equal length");
  }
  const double n = static_cast<double>(sorted.size());
  // F_n(g) and F_n(g-) at each grid point.
  std::vector<double> at(grid.size());
  std::vector<double> below(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    at[j] = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), grid[j]) - sorted.begin()) / n;
    below[j] = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), grid[j]) - sorted.begin()) / n;
  }
  // Cell (-inf, g_0) then [g_j, g_{j+1}) then [g_last, inf).
  double d = std::max(below[0], cdf_at_grid[0]);
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    d = std::max({d, below[j + 1] - cdf_at_grid[j], cdf_at_grid[j + 1] - at[j],
                  std::abs(at[j] - cdf_at_grid[j])});
  }
  d = std::max({d, std::abs(at.back() - cdf_at_grid.back()), 1.0 - at.back(),
                1.0 - cdf_at_grid.back()});
  return d;
}

std::vector<double> order_statistic_grid(std::span<const double> sorted, std::size_t cells) {
  if (sorted.empty() || cells == 0) throw DomainError("order_statistic_grid: empty input");
  std::vector<double> grid;
  grid.reserve(cells + 1);
  const std::size_t last = sorted.size() - 1;
  for (std::size_t j = 0; j <= cells; ++j) {
    const double v = sorted[j * last / cells];
    if (grid.empty() || v > grid.back()) grid.push_back(v);
  }
  return grid;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace dsd::mc
