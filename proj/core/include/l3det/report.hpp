#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l3det/evaluation.hpp"

namespace l3det {

// Column names of every CSV emitted here are fixed; downstream scripts key
// on them.

inline constexpr std::string_view kSweepCsvHeader =
    "w,windows,attack_windows,tp,fp,tn,fn,unclassified,failed,"
    "accuracy,precision,recall,f1,fpr,fnr,latency_mean_ms,latency_p99_ms";
inline constexpr std::string_view kRunCsvHeader =
    "detector,w,windows,attack_windows,tp,fp,tn,fn,unclassified,failed,"
    "accuracy,precision,recall,f1,fpr,fnr";
inline constexpr std::string_view kDescriptionCsvHeader =
    "index,name,group,annotated_group,p1,p2,p3,p4,p5,p6,predicates,length,f1,f1_completed";
inline constexpr std::string_view kGroupCsvHeader =
    "group,n,mean_f1,median_f1,p10_f1,perfect_frac,ci95_lo,ci95_hi";

struct RunSummary {
    std::string detector;
    std::size_t window = 1;
    std::size_t windows = 0;
    std::size_t attacked_windows = 0;
    ConfusionCounts counts;
    std::optional<Metrics> metrics;
    std::optional<LatencyStats> latency;
};

std::string to_json(const RunSummary& summary);
std::string to_json(std::span<const SweepRow> rows);
std::string to_json(const SensitivityReport& report);

std::string run_csv(const RunSummary& summary);
std::string sweep_csv(std::span<const SweepRow> rows);
/// Whitespace-separated columns with a '#' header, for gnuplot.
std::string sweep_dat(std::span<const SweepRow> rows);
std::string descriptions_csv(const SensitivityReport& report);
std::string groups_csv(const SensitivityReport& report);

/// One-line human summary, e.g. "metrics accuracy=1.000 precision=1.000 ...".
std::string metrics_line(const Metrics& m);

struct LatencyColumn {
    std::string name;
    LatencyStats stats;

    friend bool operator==(const LatencyColumn& a, const LatencyColumn& b);
};

/// Latency table with one column per configuration:
///   metric,<name>,...
///   mean_ms,..  median_ms  p90_ms  p95_ms  p99_ms  max_ms  min_ms  under_bound_pct
/// Values use two decimals.
std::string format_latency_table(std::span<const LatencyColumn> columns);
/// Throws Error{Parse} on malformed tables.
std::vector<LatencyColumn> parse_latency_table(std::string_view csv);

/// Renders a JSON summary written by run, sweep or study into CSV and data
/// files with stable names under `out_dir`. Returns the paths written.
std::vector<std::filesystem::path> render_report(std::string_view summary_json,
                                                 const std::filesystem::path& out_dir);

}  // namespace l3det
