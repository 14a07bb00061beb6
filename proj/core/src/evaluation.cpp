#include "l3det/evaluation.hpp"

#include <algorithm>
#include <map>

#include "l3det/error.hpp"
#include "l3det/rng.hpp"

namespace l3det {

namespace {

void count_one(ConfusionCounts& c, const DetectionResult& result, WindowLabel label, UnclassifiedPolicy policy) {
    const bool attacked = label == WindowLabel::Attacked;
    if (std::holds_alternative<DetectionFailure>(result)) {
        ++c.failed;
        return;
    }
    switch (std::get<Verdict>(result).cls) {
        case VerdictClass::Anomalous:
            ++(attacked ? c.tp : c.fp);
            break;
        case VerdictClass::Normal:
            ++(attacked ? c.fn : c.tn);
            break;
        case VerdictClass::Unclassified:
            if (policy == UnclassifiedPolicy::Pessimistic) {
                ++(attacked ? c.fn : c.fp);
            } else {
                ++c.unclassified;
            }
            break;
    }
}

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double run_f1(const TraceStore& store, WindowDetector& detector, const SensitivityConfig& config) {
    PipelineConfig pc;
    pc.window = config.window;
    pc.max_in_flight = config.max_in_flight;
    const auto outcomes = run_pipeline(store, detector, pc);
    return metrics(tally(outcomes, config.policy)).f1;
}

CorrelationResult correlate(double (*fn)(std::span<const double>, std::span<const double>),
                            std::span<const double> xs, std::span<const double> ys) {
    CorrelationResult r;
    try {
        r.value = fn(xs, ys);
    } catch (const Error& e) {
        r.error = e.what();
    }
    return r;
}

}  // namespace

UnclassifiedPolicy parse_unclassified_policy(std::string_view text) {
    if (text == "exclude") return UnclassifiedPolicy::Exclude;
    if (text == "pessimistic") return UnclassifiedPolicy::Pessimistic;
    throw Error(ErrorKind::Configuration, "unknown unclassified policy '" + std::string(text) + "'");
}

ConfusionCounts tally(std::span<const DetectionResult> results, std::span<const WindowLabel> labels,
                      UnclassifiedPolicy policy) {
    if (results.size() != labels.size()) throw Error(ErrorKind::Evaluation, "results and labels differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < results.size(); ++i) count_one(c, results[i], labels[i], policy);
    return c;
}

ConfusionCounts tally(std::span<const WindowOutcome> outcomes, UnclassifiedPolicy policy) {
    ConfusionCounts c;
    for (const auto& o : outcomes) count_one(c, o.result, o.label, policy);
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    if (c.cells() == 0) throw Error(ErrorKind::UndefinedMetrics, "no classified windows");
    Metrics m;
    m.accuracy = ratio(c.tp + c.tn, c.cells());
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.fpr = ratio(c.fp, c.fp + c.tn);
    m.fnr = ratio(c.fn, c.fn + c.tp);
    return m;
}

std::vector<Millis> verdict_latencies(std::span<const WindowOutcome> outcomes) {
    std::vector<Millis> out;
    out.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (const auto* v = std::get_if<Verdict>(&o.result)) out.push_back(v->latency);
    }
    return out;
}

std::vector<SweepRow> sweep(const Trace& trace, const DetectorFactory& make_detector, const SweepConfig& config) {
    if (config.w_min < WindowConfig::kMin || config.w_max > WindowConfig::kMax || config.w_min > config.w_max) {
        throw Error(ErrorKind::Configuration, "window range must lie within [1, 10] and be ascending");
    }
    if (trace.size() < config.w_max) {
        throw Error(ErrorKind::InsufficientData, "trace has " + std::to_string(trace.size()) +
                                                     " records, window needs " + std::to_string(config.w_max));
    }
    TraceStore store;
    load(store, trace);

    std::vector<SweepRow> rows;
    for (std::size_t w = config.w_min; w <= config.w_max; ++w) {
        auto detector = make_detector();
        PipelineConfig pc;
        pc.window = w;
        pc.prev_retrieval = config.prev_retrieval;
        pc.max_in_flight = config.max_in_flight;
        const auto outcomes = run_pipeline(store, *detector, pc);

        SweepRow row;
        row.window = w;
        row.windows = outcomes.size();
        row.attacked_windows = static_cast<std::size_t>(std::count_if(
            outcomes.begin(), outcomes.end(), [](const WindowOutcome& o) { return o.label == WindowLabel::Attacked; }));
        row.counts = tally(outcomes, config.policy);
        if (row.counts.cells() > 0) row.metrics = metrics(row.counts);
        const auto lat = verdict_latencies(outcomes);
        if (!lat.empty()) row.latency = latency_stats(lat, config.latency_bound);
        rows.push_back(std::move(row));
    }
    return rows;
}

GroupStats group_stats(AlignmentGroup group, std::span<const double> f1s, std::size_t resamples, std::uint64_t seed) {
    if (f1s.empty()) throw Error(ErrorKind::Evaluation, "group has no scores");
    std::vector<double> sorted(f1s.begin(), f1s.end());
    std::sort(sorted.begin(), sorted.end());
    GroupStats g;
    g.group = group;
    g.n = sorted.size();
    g.mean_f1 = mean(f1s);
    g.median_f1 = nearest_rank(sorted, 0.5);
    g.p10_f1 = nearest_rank(sorted, 0.1);
    g.perfect_frac = static_cast<double>(std::count(sorted.begin(), sorted.end(), 1.0)) / static_cast<double>(g.n);
    g.ci95 = bootstrap_ci(f1s, resamples, 0.95, seed);
    return g;
}

SensitivityReport sensitivity_study(const std::vector<LintedDescription>& descriptions, const Trace& trace,
                                    const DescribedDetectorFactory& make_detector, const SensitivityConfig& config) {
    if (descriptions.empty()) throw Error(ErrorKind::Evaluation, "no descriptions to study");
    TraceStore store;
    load(store, trace);

    SensitivityReport report;
    for (const auto& d : descriptions) {
        DescriptionResult r{d, 0.0, std::nullopt, std::nullopt};
        try {
            auto detector = make_detector(d.description);
            r.f1 = run_f1(store, *detector, config);
            if (config.compare_completed) {
                const auto completed = complete_description(d.description, d.coverage);
                if (completed == d.description) {
                    r.f1_completed = r.f1;
                } else {
                    auto cd = make_detector(completed);
                    r.f1_completed = run_f1(store, *cd, config);
                }
            }
        } catch (const Error& e) {
            r.error = e.what();
        }
        report.descriptions.push_back(std::move(r));
    }

    std::map<AlignmentGroup, std::vector<double>> by_group;
    std::vector<double> counts;
    std::vector<double> lengths;
    std::vector<double> f1s;
    std::vector<double> before;
    std::vector<double> after;
    for (const auto& r : report.descriptions) {
        if (r.error) continue;
        by_group[r.linted.group].push_back(r.f1);
        counts.push_back(static_cast<double>(r.linted.coverage.grouping_count()));
        lengths.push_back(static_cast<double>(description_length(r.linted.description.body())));
        f1s.push_back(r.f1);
        if (r.f1_completed) {
            before.push_back(r.f1);
            after.push_back(*r.f1_completed);
        }
    }

    for (std::size_t i = 0; i < kAlignmentGroups.size(); ++i) {
        const auto g = kAlignmentGroups[i];
        if (const auto it = by_group.find(g); it != by_group.end()) {
            report.groups.push_back(group_stats(g, it->second, config.bootstrap_resamples, derive_seed(config.seed, i)));
        }
    }

    if (!f1s.empty()) {
        report.spearman_predicates = correlate(&spearman, counts, f1s);
        report.kendall_predicates = correlate(&kendall_tau, counts, f1s);
        report.spearman_length = correlate(&spearman, lengths, f1s);
    } else {
        const CorrelationResult none{std::nullopt, "no successful descriptions"};
        report.spearman_predicates = report.kendall_predicates = report.spearman_length = none;
    }

    if (const auto nit = by_group.find(AlignmentGroup::Not); nit != by_group.end()) {
        for (auto g : {AlignmentGroup::Directly, AlignmentGroup::Closely, AlignmentGroup::Somewhat}) {
            EffectSize e{g, std::nullopt};
            if (const auto it = by_group.find(g); it != by_group.end()) e.delta = cliffs_delta(it->second, nit->second);
            report.versus_not.push_back(e);
        }
    }

    if (!before.empty()) {
        report.mean_f1_before = mean(before);
        report.mean_f1_after = mean(after);
    }
    return report;
}

}  // namespace l3det
