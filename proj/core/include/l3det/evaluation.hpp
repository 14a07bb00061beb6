#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l3det/detector.hpp"
#include "l3det/pipeline.hpp"
#include "l3det/prompting.hpp"
#include "l3det/stats.hpp"

namespace l3det {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;
    std::uint64_t unclassified = 0;
    std::uint64_t failed = 0;

    std::uint64_t cells() const noexcept { return tp + fp + tn + fn; }
    std::uint64_t total() const noexcept { return cells() + unclassified + failed; }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

enum class UnclassifiedPolicy {
    /// Count Unclassified separately, outside the four cells.
    Exclude,
    /// Treat Unclassified as wrong: fn on attacked windows, fp otherwise.
    Pessimistic,
};

UnclassifiedPolicy parse_unclassified_policy(std::string_view text);

/// Throws Error{Evaluation} when lengths differ.
ConfusionCounts tally(std::span<const DetectionResult> results, std::span<const WindowLabel> labels,
                      UnclassifiedPolicy policy = UnclassifiedPolicy::Exclude);

ConfusionCounts tally(std::span<const WindowOutcome> outcomes,
                      UnclassifiedPolicy policy = UnclassifiedPolicy::Exclude);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
};

/// Ratios with a zero denominator are 0. Throws Error{UndefinedMetrics} when
/// all four cells are zero.
Metrics metrics(const ConfusionCounts& counts);

/// Latencies of the successful verdicts.
std::vector<Millis> verdict_latencies(std::span<const WindowOutcome> outcomes);

// ---------------------------------------------------------------------------
// Window-size sweep

struct SweepRow {
    std::size_t window = 0;
    std::size_t windows = 0;
    std::size_t attacked_windows = 0;
    ConfusionCounts counts;
    std::optional<Metrics> metrics;
    std::optional<LatencyStats> latency;
};

struct SweepConfig {
    std::size_t w_min = 1;
    std::size_t w_max = 10;
    bool prev_retrieval = true;
    std::size_t max_in_flight = 1;
    UnclassifiedPolicy policy = UnclassifiedPolicy::Exclude;
    Millis latency_bound{1000};
};

/// One row per window size, ascending. A fresh detector is built for every
/// row. Throws Error{InsufficientData} when the trace is shorter than w_max.
std::vector<SweepRow> sweep(const Trace& trace, const DetectorFactory& make_detector,
                            const SweepConfig& config);

// ---------------------------------------------------------------------------
// Description sensitivity

struct GroupStats {
    AlignmentGroup group = AlignmentGroup::Not;
    std::size_t n = 0;
    double mean_f1 = 0.0;
    double median_f1 = 0.0;
    double p10_f1 = 0.0;
    double perfect_frac = 0.0;
    ConfidenceInterval ci95;
};

/// Throws Error{Evaluation} when f1s is empty.
GroupStats group_stats(AlignmentGroup group, std::span<const double> f1s, std::size_t resamples,
                       std::uint64_t seed);

struct DescriptionResult {
    LintedDescription linted;
    double f1 = 0.0;
    /// F1 after complete_description.
    std::optional<double> f1_completed;
    std::optional<std::string> error;
};

/// A correlation that may be undefined for degenerate inputs.
struct CorrelationResult {
    std::optional<double> value;
    std::optional<std::string> error;
};

struct EffectSize {
    AlignmentGroup versus = AlignmentGroup::Directly;
    std::optional<double> delta;
};

struct SensitivityReport {
    std::vector<DescriptionResult> descriptions;
    /// One entry per group that has at least one description.
    std::vector<GroupStats> groups;
    CorrelationResult spearman_predicates;
    CorrelationResult kendall_predicates;
    CorrelationResult spearman_length;
    /// Cliff's delta of each other group's F1 against the Not group.
    std::vector<EffectSize> versus_not;
    std::optional<double> mean_f1_before;
    std::optional<double> mean_f1_after;
};

struct SensitivityConfig {
    std::size_t window = 1;
    std::size_t max_in_flight = 1;
    bool compare_completed = true;
    std::size_t bootstrap_resamples = 2000;
    std::uint64_t seed = 1;
    UnclassifiedPolicy policy = UnclassifiedPolicy::Exclude;
};

using DescribedDetectorFactory =
    std::function<std::unique_ptr<WindowDetector>(const AttackDescription&)>;

/// Runs the pipeline once per description (and once per completed
/// description), then groups and correlates the F1 scores.
SensitivityReport sensitivity_study(const std::vector<LintedDescription>& descriptions,
                                    const Trace& trace, const DescribedDetectorFactory& make_detector,
                                    const SensitivityConfig& config);

}  // namespace l3det
