#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "l3det/detector.hpp"

namespace l3det {

/// Nearest-rank percentile: the ceil(p * n)-th smallest value (at least the
/// first). p in [0, 1]; `sorted` ascending and nonempty.
double nearest_rank(std::span<const double> sorted, double p);

/// Arithmetic mean computed as x0 + mean(x - x0), exact for constant input.
double mean(std::span<const double> values);

struct LatencyStats {
    Millis mean{0};
    Millis median{0};
    Millis p90{0};
    Millis p95{0};
    Millis p99{0};
    Millis max{0};
    Millis min{0};
    /// Share of samples strictly below `bound`.
    double frac_under_bound = 0.0;
    Millis bound{1000};
};

/// Throws Error{Evaluation} on an empty sample set.
LatencyStats latency_stats(std::span<const Millis> samples, Millis bound = Millis{1000});

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap of the mean.
///
/// Resample b draws n indices with uniform_below(rng, n) from an Rng seeded
/// with `seed`, in order; lo and hi are the nearest-rank (1-level)/2 and
/// (1+level)/2 quantiles of the resample means. Throws Error{Evaluation} on
/// empty input, zero resamples, or level outside (0, 1).
ConfidenceInterval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level,
                                std::uint64_t seed);

/// Pearson correlation of average ranks. Throws Error{UndefinedCorrelation}
/// when either side has zero rank variance, Error{Evaluation} on length
/// mismatch or empty input.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Kendall tau-b (tie-corrected), O(n log n). Same errors as spearman.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

/// (#(a > b) - #(a < b)) / (|a| |b|). Throws Error{Evaluation} on an empty group.
double cliffs_delta(std::span<const double> a, std::span<const double> b);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace l3det
