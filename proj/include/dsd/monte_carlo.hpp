#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace dsd::mc {

using Engine = std::mt19937_64;

/// Work split for a seeded Monte Carlo run. Draw i belongs to chunk
/// i / chunk_size and chunk k always uses the engine chunk_engine(seed, k), so
/// results depend on (seed, count, chunk_size) and never on `threads`.
struct ChunkPlan {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t chunk_size = 65536;
  int threads = 1;
};

std::uint64_t splitmix64(std::uint64_t x);
Engine chunk_engine(std::uint64_t seed, std::uint64_t chunk);

/// Uniform on the open interval (0, 1) from 53 random bits.
double uniform_open(Engine& engine);

/// Calls body(begin, end, engine) once per chunk, distributing chunks over
/// plan.threads worker threads. The first exception thrown by any chunk is
/// rethrown after all workers finish.
void for_each_chunk(const ChunkPlan& plan,
                    const std::function<void(std::size_t, std::size_t, Engine&)>& body);

/// plan.count draws of `draw`, in chunk order.
std::vector<double> generate(const ChunkPlan& plan, const std::function<double(Engine&)>& draw);

/// Gamma(shape, scale 1) draw.
double gamma_draw(Engine& engine, double shape);

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
  std::size_t count = 0;
};

Summary summarize(std::span<const double> x);

/// Type-7 (linear interpolation between order statistics) quantile of
/// already sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Gaussian kernel density estimate at x with Silverman's rule-of-thumb
/// bandwidth; `sorted` must be sorted.
double kde_density(std::span<const double> sorted, double x);
double silverman_bandwidth(std::span<const double> sorted);

/// Exact one-sample Kolmogorov-Smirnov distance sup |F_n - F| for sorted data.
double ks_one_sample(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// Upper bound on the one-sample KS distance using the CDF only at `grid`
/// (sorted): on each cell the empirical and model CDFs are bracketed by
/// their values at the cell ends.
double ks_bound_on_grid(std::span<const double> sorted, std::span<const double> grid,
                        std::span<const double> cdf_at_grid);

/// Grid made of order statistics at `cells` evenly spaced ranks (plus the
/// extremes), for use with ks_bound_on_grid.
std::vector<double> order_statistic_grid(std::span<const double> sorted, std::size_t cells);

/// Exact two-sample KS distance; inputs must be sorted.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

}  // namespace dsd::mc
