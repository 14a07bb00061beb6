#include "l3det/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "l3det/error.hpp"
#include "l3det/trace_io.hpp"

namespace l3det {

namespace {

using nlohmann::json;

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

json counts_json(const ConfusionCounts& c) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}, {"unclassified", c.unclassified}, {"failed", c.failed}};
}

ConfusionCounts counts_from(const json& j) {
    ConfusionCounts c;
    c.tp = j.at("tp").get<std::uint64_t>();
    c.fp = j.at("fp").get<std::uint64_t>();
    c.tn = j.at("tn").get<std::uint64_t>();
    c.fn = j.at("fn").get<std::uint64_t>();
    c.unclassified = j.value("unclassified", std::uint64_t{0});
    c.failed = j.value("failed", std::uint64_t{0});
    return c;
}

json metrics_json(const std::optional<Metrics>& m) {
    if (!m) return nullptr;
    return {{"accuracy", m->accuracy}, {"precision", m->precision}, {"recall", m->recall},
            {"f1", m->f1},             {"fpr", m->fpr},             {"fnr", m->fnr}};
}

std::optional<Metrics> metrics_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    Metrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.fpr = j.at("fpr").get<double>();
    m.fnr = j.at("fnr").get<double>();
    return m;
}

json latency_json(const std::optional<LatencyStats>& l) {
    if (!l) return nullptr;
    return {{"mean_ms", l->mean.count()},   {"median_ms", l->median.count()},
            {"p90_ms", l->p90.count()},     {"p95_ms", l->p95.count()},
            {"p99_ms", l->p99.count()},     {"max_ms", l->max.count()},
            {"min_ms", l->min.count()},     {"under_bound_pct", l->frac_under_bound * 100.0},
            {"bound_ms", l->bound.count()}};
}

std::optional<LatencyStats> latency_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    LatencyStats l;
    l.mean = Millis{j.at("mean_ms").get<double>()};
    l.median = Millis{j.at("median_ms").get<double>()};
    l.p90 = Millis{j.at("p90_ms").get<double>()};
    l.p95 = Millis{j.at("p95_ms").get<double>()};
    l.p99 = Millis{j.at("p99_ms").get<double>()};
    l.max = Millis{j.at("max_ms").get<double>()};
    l.min = Millis{j.at("min_ms").get<double>()};
    l.frac_under_bound = j.at("under_bound_pct").get<double>() / 100.0;
    l.bound = Millis{j.value("bound_ms", 1000.0)};
    return l;
}

json sweep_row_json(const SweepRow& r) {
    return {{"w", r.window},
            {"windows", r.windows},
            {"attack_windows", r.attacked_windows},
            {"counts", counts_json(r.counts)},
            {"metrics", metrics_json(r.metrics)},
            {"latency", latency_json(r.latency)}};
}

SweepRow sweep_row_from(const json& j) {
    SweepRow r;
    r.window = j.at("w").get<std::size_t>();
    r.windows = j.at("windows").get<std::size_t>();
    r.attacked_windows = j.at("attack_windows").get<std::size_t>();
    r.counts = counts_from(j.at("counts"));
    r.metrics = metrics_from(j.at("metrics"));
    r.latency = latency_from(j.at("latency"));
    return r;
}

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json optional_json(const std::optional<std::string>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_double(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

json correlation_json(const CorrelationResult& c) {
    return {{"value", optional_json(c.value)}, {"error", optional_json(c.error)}};
}

std::string metric_cells(const std::optional<Metrics>& m) {
    if (!m) return ",,,,,";
    return fixed(m->accuracy, 6) + ',' + fixed(m->precision, 6) + ',' + fixed(m->recall, 6) + ',' +
           fixed(m->f1, 6) + ',' + fixed(m->fpr, 6) + ',' + fixed(m->fnr, 6);
}

std::string count_cells(const ConfusionCounts& c) {
    return std::to_string(c.tp) + ',' + std::to_string(c.fp) + ',' + std::to_string(c.tn) + ',' +
           std::to_string(c.fn) + ',' + std::to_string(c.unclassified) + ',' + std::to_string(c.failed);
}

SensitivityReport study_from(const json& j) {
    SensitivityReport r;
    for (const auto& d : j.at("descriptions")) {
        AttackDescription desc(d.at("name").get<std::string>(), d.at("body").get<std::string>());
        LintedDescription linted = lint(desc);
        linted.annotated_group = optional_string(d, "annotated_group");
        r.descriptions.push_back({std::move(linted), d.at("f1").get<double>(), optional_double(d, "f1_completed"),
                                  optional_string(d, "error")});
    }
    for (const auto& g : j.at("groups")) {
        GroupStats s;
        const auto group = parse_alignment_group(g.at("group").get<std::string>());
        if (!group) throw Error(ErrorKind::Parse, "unknown alignment group in summary");
        s.group = *group;
        s.n = g.at("n").get<std::size_t>();
        s.mean_f1 = g.at("mean_f1").get<double>();
        s.median_f1 = g.at("median_f1").get<double>();
        s.p10_f1 = g.at("p10_f1").get<double>();
        s.perfect_frac = g.at("perfect_frac").get<double>();
        s.ci95 = {g.at("ci95_lo").get<double>(), g.at("ci95_hi").get<double>()};
        r.groups.push_back(s);
    }
    return r;
}

}  // namespace

std::string to_json(const RunSummary& s) {
    json j = {{"kind", "run"},
              {"detector", s.detector},
              {"w", s.window},
              {"windows", s.windows},
              {"attack_windows", s.attacked_windows},
              {"counts", counts_json(s.counts)},
              {"metrics", metrics_json(s.metrics)},
              {"latency", latency_json(s.latency)}};
    return j.dump(2);
}

std::string to_json(std::span<const SweepRow> rows) {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(sweep_row_json(r));
    return json{{"kind", "sweep"}, {"rows", std::move(arr)}}.dump(2);
}

std::string to_json(const SensitivityReport& report) {
    json descs = json::array();
    for (std::size_t i = 0; i < report.descriptions.size(); ++i) {
        const auto& d = report.descriptions[i];
        json preds = json::array();
        for (bool b : d.linted.coverage.satisfied) preds.push_back(b);
        descs.push_back({{"index", i},
                         {"name", d.linted.description.name()},
                         {"body", d.linted.description.body()},
                         {"group", std::string(to_string(d.linted.group))},
                         {"annotated_group", optional_json(d.linted.annotated_group)},
                         {"predicates", std::move(preds)},
                         {"coverage", d.linted.coverage.to_string()},
                         {"grouping_count", d.linted.coverage.grouping_count()},
                         {"length", description_length(d.linted.description.body())},
                         {"f1", d.f1},
                         {"f1_completed", optional_json(d.f1_completed)},
                         {"error", optional_json(d.error)}});
    }
    json groups = json::array();
    for (const auto& g : report.groups) {
        groups.push_back({{"group", std::string(to_string(g.group))},
                          {"n", g.n},
                          {"mean_f1", g.mean_f1},
                          {"median_f1", g.median_f1},
                          {"p10_f1", g.p10_f1},
                          {"perfect_frac", g.perfect_frac},
                          {"ci95_lo", g.ci95.lo},
                          {"ci95_hi", g.ci95.hi}});
    }
    json effects = json::array();
    for (const auto& e : report.versus_not) {
        effects.push_back({{"group", std::string(to_string(e.versus))}, {"delta", optional_json(e.delta)}});
    }
    json j = {{"kind", "study"},
              {"descriptions", std::move(descs)},
              {"groups", std::move(groups)},
              {"correlations",
               {{"spearman_predicates", correlation_json(report.spearman_predicates)},
                {"kendall_predicates", correlation_json(report.kendall_predicates)},
                {"spearman_length", correlation_json(report.spearman_length)}}},
              {"versus_not", std::move(effects)},
              {"mean_f1_before", optional_json(report.mean_f1_before)},
              {"mean_f1_after", optional_json(report.mean_f1_after)}};
    return j.dump(2);
}

std::string run_csv(const RunSummary& s) {
    std::string out(kRunCsvHeader);
    out += '\n';
    out += csv_field(s.detector) + ',' + std::to_string(s.window) + ',' + std::to_string(s.windows) + ',' +
           std::to_string(s.attacked_windows) + ',' + count_cells(s.counts) + ',' + metric_cells(s.metrics) + '\n';
    return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::string out(kSweepCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.window) + ',' + std::to_string(r.windows) + ',' + std::to_string(r.attacked_windows) +
               ',' + count_cells(r.counts) + ',' + metric_cells(r.metrics) + ',';
        if (r.latency) out += fixed(r.latency->mean.count(), 3) + ',' + fixed(r.latency->p99.count(), 3);
        else out += ',';
        out += '\n';
    }
    return out;
}

std::string sweep_dat(std::span<const SweepRow> rows) {
    std::string out = "# w accuracy precision recall f1 fpr fnr\n";
    for (const auto& r : rows) {
        if (!r.metrics) continue;
        const auto& m = *r.metrics;
        out += std::to_string(r.window) + ' ' + fixed(m.accuracy, 6) + ' ' + fixed(m.precision, 6) + ' ' +
               fixed(m.recall, 6) + ' ' + fixed(m.f1, 6) + ' ' + fixed(m.fpr, 6) + ' ' + fixed(m.fnr, 6) + '\n';
    }
    return out;
}

std::string descriptions_csv(const SensitivityReport& report) {
    std::string out(kDescriptionCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < report.descriptions.size(); ++i) {
        const auto& d = report.descriptions[i];
        out += std::to_string(i) + ',' + csv_field(d.linted.description.name()) + ',' +
               std::string(to_string(d.linted.group)) + ',' + csv_field(d.linted.annotated_group.value_or("")) + ',';
        for (bool b : d.linted.coverage.satisfied) out += b ? "1," : "0,";
        out += std::to_string(d.linted.coverage.grouping_count()) + ',' +
               std::to_string(description_length(d.linted.description.body())) + ',';
        out += d.error ? std::string() : fixed(d.f1, 6);
        out += ',';
        if (d.f1_completed && !d.error) out += fixed(*d.f1_completed, 6);
        out += '\n';
    }
    return out;
}

std::string groups_csv(const SensitivityReport& report) {
    std::string out(kGroupCsvHeader);
    out += '\n';
    for (const auto& g : report.groups) {
        out += std::string(to_string(g.group)) + ',' + std::to_string(g.n) + ',' + fixed(g.mean_f1, 6) + ',' +
               fixed(g.median_f1, 6) + ',' + fixed(g.p10_f1, 6) + ',' + fixed(g.perfect_frac, 6) + ',' +
               fixed(g.ci95.lo, 6) + ',' + fixed(g.ci95.hi, 6) + '\n';
    }
    return out;
}

std::string metrics_line(const Metrics& m) {
    return "metrics accuracy=" + fixed(m.accuracy, 3) + " precision=" + fixed(m.precision, 3) +
           " recall=" + fixed(m.recall, 3) + " f1=" + fixed(m.f1, 3) + " fpr=" + fixed(m.fpr, 3) +
           " fnr=" + fixed(m.fnr, 3);
}

// ---------------------------------------------------------------------------
// Latency tables

namespace {

constexpr std::string_view kLatencyRows[] = {"mean_ms", "median_ms", "p90_ms", "p95_ms",
                                             "p99_ms",  "max_ms",    "min_ms", "under_bound_pct"};

std::array<double, 8> latency_values(const LatencyStats& s) {
    return {s.mean.count(), s.median.count(), s.p90.count(), s.p95.count(),
            s.p99.count(),  s.max.count(),    s.min.count(), s.frac_under_bound * 100.0};
}

double round2(double v) {
    return std::round(v * 100.0) / 100.0;
}

}  // namespace

bool operator==(const LatencyColumn& a, const LatencyColumn& b) {
    if (a.name != b.name) return false;
    const auto va = latency_values(a.stats);
    const auto vb = latency_values(b.stats);
    for (std::size_t i = 0; i < va.size(); ++i) {
        if (round2(va[i]) != round2(vb[i])) return false;
    }
    return true;
}

std::string format_latency_table(std::span<const LatencyColumn> columns) {
    std::string out = "metric";
    for (const auto& c : columns) out += ',' + csv_field(c.name);
    out += '\n';
    std::vector<std::array<double, 8>> values;
    for (const auto& c : columns) values.push_back(latency_values(c.stats));
    for (std::size_t r = 0; r < std::size(kLatencyRows); ++r) {
        out += kLatencyRows[r];
        for (const auto& v : values) out += ',' + fixed(v[r], 2);
        out += '\n';
    }
    return out;
}

std::vector<LatencyColumn> parse_latency_table(std::string_view csv) {
    std::vector<std::vector<std::string>> lines;
    std::istringstream in{std::string(csv)};
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(split_csv_line(line));
    }
    if (lines.size() != 1 + std::size(kLatencyRows) || lines[0].empty() || lines[0][0] != "metric") {
        throw Error(ErrorKind::Parse, "latency table needs a metric header and 8 rows");
    }
    const std::size_t ncols = lines[0].size() - 1;
    std::vector<std::array<double, 8>> values(ncols);
    for (std::size_t r = 0; r < std::size(kLatencyRows); ++r) {
        const auto& row = lines[r + 1];
        if (row.size() != ncols + 1 || row[0] != kLatencyRows[r]) {
            throw Error(ErrorKind::Parse, "latency table row " + std::to_string(r + 2) + " is malformed");
        }
        for (std::size_t c = 0; c < ncols; ++c) {
            try {
                std::size_t used = 0;
                values[c][r] = std::stod(row[c + 1], &used);
                if (used != row[c + 1].size()) throw std::invalid_argument("trailing text");
            } catch (const std::exception&) {
                throw Error(ErrorKind::Parse, "latency table cell '" + row[c + 1] + "' is not a number");
            }
        }
    }
    std::vector<LatencyColumn> out;
    for (std::size_t c = 0; c < ncols; ++c) {
        const auto& v = values[c];
        LatencyStats s;
        s.mean = Millis{v[0]};
        s.median = Millis{v[1]};
        s.p90 = Millis{v[2]};
        s.p95 = Millis{v[3]};
        s.p99 = Millis{v[4]};
        s.max = Millis{v[5]};
        s.min = Millis{v[6]};
        s.frac_under_bound = v[7] / 100.0;
        out.push_back({lines[0][c + 1], s});
    }
    return out;
}

std::vector<std::filesystem::path> render_report(std::string_view summary_json, const std::filesystem::path& out_dir) {
    json j;
    try {
        j = json::parse(summary_json);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("summary is not JSON: ") + e.what());
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir.string());

    std::vector<std::filesystem::path> written;
    auto emit = [&](const char* name, const std::string& content) {
        const auto p = out_dir / name;
        write_file_atomic(p, content);
        written.push_back(p);
    };

    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "run") {
            RunSummary s;
            s.detector = j.at("detector").get<std::string>();
            s.window = j.at("w").get<std::size_t>();
            s.windows = j.at("windows").get<std::size_t>();
            s.attacked_windows = j.at("attack_windows").get<std::size_t>();
            s.counts = counts_from(j.at("counts"));
            s.metrics = metrics_from(j.at("metrics"));
            s.latency = latency_from(j.at("latency"));
            emit("run.csv", run_csv(s));
            if (s.latency) {
                const LatencyColumn col{s.detector + " w=" + std::to_string(s.window), *s.latency};
                emit("latency.csv", format_latency_table(std::span(&col, 1)));
            }
        } else if (kind == "sweep") {
            std::vector<SweepRow> rows;
            for (const auto& r : j.at("rows")) rows.push_back(sweep_row_from(r));
            emit("sweep.csv", sweep_csv(rows));
            emit("sweep.dat", sweep_dat(rows));
            std::vector<LatencyColumn> cols;
            for (const auto& r : rows) {
                if (r.latency) cols.push_back({"w=" + std::to_string(r.window), *r.latency});
            }
            if (!cols.empty()) emit("latency.csv", format_latency_table(cols));
        } else if (kind == "study") {
            const auto report = study_from(j);
            emit("descriptions.csv", descriptions_csv(report));
            emit("groups.csv", groups_csv(report));
        } else {
            throw Error(ErrorKind::Parse, "unknown summary kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed summary: ") + e.what());
    }
    return written;
}

}  // namespace l3det
