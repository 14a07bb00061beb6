#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "l3det/backend.hpp"
#include "l3det/detector.hpp"
#include "l3det/error.hpp"
#include "l3det/evaluation.hpp"
#include "l3det/hash.hpp"
#include "l3det/pipeline.hpp"
#include "l3det/prompting.hpp"
#include "l3det/report.hpp"
#include "l3det/sdl.hpp"
#include "l3det/trace_io.hpp"

namespace l3det::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Manifest

class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)) {}

    json& config() { return config_; }
    json& seeds() { return seeds_; }
    void input(const fs::path& p) { inputs_.push_back(p); }
    void output(const fs::path& p) { outputs_.push_back(p); }
    void timing(const std::string& phase, Clock::duration d) {
        timings_[phase] = std::chrono::duration<double, std::milli>(d).count();
    }

    void write(const fs::path& path) const {
        json j;
        j["command"] = command_;
        j["config"] = config_;
        j["seeds"] = seeds_;
        j["inputs"] = artifacts(inputs_);
        j["outputs"] = artifacts(outputs_);
        j["timings_ms"] = timings_;
        write_file_atomic(path, j.dump(2) + "\n");
    }

private:
    static json artifacts(const std::vector<fs::path>& paths) {
        json arr = json::array();
        for (const auto& p : paths) {
            json a = {{"path", p.string()}};
            std::error_code ec;
            if (fs::is_regular_file(p, ec)) a["fnv1a64"] = to_hex(fnv1a64(read_file(p)));
            arr.push_back(std::move(a));
        }
        return arr;
    }

    std::string command_;
    json config_ = json::object();
    json seeds_ = json::object();
    json timings_ = json::object();
    std::vector<fs::path> inputs_;
    std::vector<fs::path> outputs_;
};

fs::path manifest_path(const std::string& explicit_path, const std::string& out, const std::string& command) {
    if (!explicit_path.empty()) return explicit_path;
    if (!out.empty()) return out + ".manifest.json";
    return "l3det-" + command + ".manifest.json";
}

// ---------------------------------------------------------------------------
// Shared options

struct WindowRange {
    std::size_t lo = 1;
    std::size_t hi = 1;
};

WindowRange parse_window_range(const std::string& text) {
    auto number = [&](const std::string& s) -> std::size_t {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) {
            throw Error(ErrorKind::Configuration, "window '" + text + "' is not N or A..B");
        }
        return static_cast<std::size_t>(v);
    };
    const auto dots = text.find("..");
    WindowRange r;
    if (dots == std::string::npos) {
        r.lo = r.hi = number(text);
    } else {
        r.lo = number(text.substr(0, dots));
        r.hi = number(text.substr(dots + 2));
    }
    (void)WindowConfig(r.lo);
    (void)WindowConfig(r.hi);
    if (r.lo > r.hi) throw Error(ErrorKind::Configuration, "window range '" + text + "' is descending");
    return r;
}

struct DetectorOptions {
    std::string detector = "oracle";
    std::string endpoint;
    std::string model;
    std::string mode = "zeroshot";
    std::string desc;
    std::string config;
    std::string oracle_context = "auto";
    bool explain = false;
    bool transcript_compat = false;
    int max_tokens = -1;
    long timeout_ms = -1;
    int retries = -1;
    std::size_t max_in_flight = 1;
};

void add_detector_options(CLI::App* cmd, DetectorOptions& o) {
    cmd->add_option("--detector", o.detector, "oracle | mock:<file> | chat")->capture_default_str();
    cmd->add_option("--endpoint", o.endpoint, "chat-completions URL");
    cmd->add_option("--model", o.model, "model name sent to the backend");
    cmd->add_option("--mode", o.mode, "zeroshot | generic-cot | custom-cot")->capture_default_str();
    cmd->add_option("--desc", o.desc, "description file (JSON lines); first entry is used");
    cmd->add_option("--config", o.config, "JSON backend configuration file");
    cmd->add_option("--oracle-context", o.oracle_context, "auto | full | visible; auto follows --no-prev")->capture_default_str();
    cmd->add_flag("--explain", o.explain, "ask for a reason with Anomalous verdicts");
    cmd->add_flag("--transcript-compat", o.transcript_compat, "mark the previous-message line as new");
    cmd->add_option("--max-tokens", o.max_tokens, "output token limit");
    cmd->add_option("--timeout-ms", o.timeout_ms, "request timeout");
    cmd->add_option("--retries", o.retries, "extra attempts on transport failure");
    cmd->add_option("--max-in-flight", o.max_in_flight, "concurrent classifications")->capture_default_str();
}

json options_json(const DetectorOptions& o) {
    return {{"detector", o.detector}, {"endpoint", o.endpoint}, {"model", o.model},
            {"mode", o.mode},         {"desc", o.desc},         {"config", o.config},
            {"oracle_context", o.oracle_context}, {"explain", o.explain},
            {"transcript_compat", o.transcript_compat}, {"max_in_flight", o.max_in_flight}};
}

/// Owns the backend a detector refers to.
class DetectorSetup {
public:
    DetectorSetup(const DetectorOptions& o, Manifest& manifest) : options_(o) {
        if (!o.config.empty()) {
            manifest.input(o.config);
            apply_config_file(o.config);
        }
        if (!o.model.empty()) backend_config_.model = o.model;
        if (!o.endpoint.empty()) backend_config_.endpoint = o.endpoint;
        if (o.max_tokens > 0) backend_config_.max_output_tokens = o.max_tokens;
        if (o.timeout_ms > 0) backend_config_.request_timeout = std::chrono::milliseconds(o.timeout_ms);
        if (o.retries >= 0) retries_ = o.retries;
        backend_config_.explanation_enabled = o.explain;
        mode_ = parse_prompt_mode(o.mode);

        if (o.oracle_context == "full" || o.oracle_context == "auto") {
            oracle_context_ = OracleContext::FullPrefix;
        } else if (o.oracle_context == "visible") {
            oracle_context_ = OracleContext::Visible;
        } else {
            throw Error(ErrorKind::Configuration, "unknown oracle context '" + o.oracle_context + "'");
        }

        if (o.detector == "oracle") {
            kind_ = Kind::Oracle;
        } else if (o.detector.rfind("mock:", 0) == 0) {
            kind_ = Kind::Llm;
            const fs::path file = o.detector.substr(5);
            manifest.input(file);
            backend_ = std::make_unique<MockBackend>(MockBackend::from_file(file));
        } else if (o.detector == "chat") {
            kind_ = Kind::Llm;
            if (backend_config_.endpoint.empty()) {
                throw Error(ErrorKind::Configuration, "chat detector needs --endpoint or an endpoint in --config");
            }
            HttpBackendOptions http;
            http.endpoint = backend_config_.endpoint;
            http.timeout = backend_config_.request_timeout;
            http.retries = retries_;
            if (const char* key = std::getenv(kApiKeyEnv); key != nullptr && *key != '\0') http.api_key = key;
            backend_ = std::make_unique<HttpChatBackend>(std::move(http));
        } else {
            throw Error(ErrorKind::Configuration, "unknown detector '" + o.detector + "'");
        }

        if (!o.desc.empty()) {
            manifest.input(o.desc);
            auto descs = read_descriptions(o.desc);
            if (descs.empty()) throw Error(ErrorKind::Configuration, "description file " + o.desc + " is empty");
            description_.emplace(descs.front().description);
        }
    }

    bool is_oracle() const noexcept { return kind_ == Kind::Oracle; }
    ChatBackend* backend() const noexcept { return backend_.get(); }
    const BackendConfig& backend_config() const noexcept { return backend_config_; }
    const AttackDescription& description() const {
        return description_ ? *description_ : default_blind_dos_description();
    }

    std::unique_ptr<WindowDetector> make(const AttackDescription& d) const {
        if (kind_ == Kind::Oracle) return std::make_unique<OracleDetector>(oracle_context_);
        return std::make_unique<LlmDetector>(*backend_, backend_config_, d, mode_, options_.transcript_compat);
    }
    std::unique_ptr<WindowDetector> make() const { return make(description()); }

    json resolved() const {
        json j = options_json(options_);
        j["model"] = backend_config_.model;
        j["endpoint"] = backend_config_.endpoint;
        j["max_tokens"] = backend_config_.max_output_tokens;
        j["timeout_ms"] = backend_config_.request_timeout.count();
        j["retries"] = retries_;
        j["description"] = {{"name", description().name()}, {"body", description().body()}};
        return j;
    }

private:
    enum class Kind { Oracle, Llm };

    void apply_config_file(const fs::path& path) {
        json j;
        try {
            j = json::parse(read_file(path));
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
        }
        if (!j.is_object()) throw Error(ErrorKind::Parse, path.string() + ": expected a JSON object");
        try {
            if (j.contains("endpoint")) backend_config_.endpoint = j.at("endpoint").get<std::string>();
            if (j.contains("model")) backend_config_.model = j.at("model").get<std::string>();
            if (j.contains("max_tokens")) backend_config_.max_output_tokens = j.at("max_tokens").get<int>();
            if (j.contains("timeout_ms")) {
                backend_config_.request_timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
            }
            if (j.contains("retries")) retries_ = j.at("retries").get<int>();
            if (j.contains("temperature")) backend_config_.temperature = j.at("temperature").get<double>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
        }
        if (backend_config_.temperature != 0.0) {
            throw Error(ErrorKind::Configuration, "detection requires temperature 0");
        }
    }

    DetectorOptions options_;
    Kind kind_ = Kind::Oracle;
    BackendConfig backend_config_;
    int retries_ = 0;
    PromptMode mode_ = PromptMode::ZeroShot;
    OracleContext oracle_context_ = OracleContext::FullPrefix;
    std::unique_ptr<ChatBackend> backend_;
    std::optional<AttackDescription> description_;
};

/// Without retrieval the oracle sees only what a prompt would carry.
DetectorOptions resolve_context(DetectorOptions d, bool no_prev) {
    if (d.oracle_context == "auto") d.oracle_context = no_prev ? "visible" : "full";
    return d;
}

std::string fixed(double v, int decimals) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(decimals);
    s << v;
    return s.str();
}

void print_counts(std::ostream& out, const ConfusionCounts& c) {
    out << "counts tp=" << c.tp << " fp=" << c.fp << " tn=" << c.tn << " fn=" << c.fn
        << " unclassified=" << c.unclassified << " failed=" << c.failed << '\n';
}

void print_latency(std::ostream& out, const LatencyStats& l, bool compute) {
    out << "latency kind=" << (compute ? "compute" : "round-trip") << " mean_ms=" << fixed(l.mean.count(), 3)
        << " median_ms=" << fixed(l.median.count(), 3) << " p99_ms=" << fixed(l.p99.count(), 3)
        << " max_ms=" << fixed(l.max.count(), 3) << " under_" << fixed(l.bound.count(), 0)
        << "ms=" << fixed(l.frac_under_bound * 100.0, 2) << "%\n";
}

Trace load_trace(const std::string& path, Manifest& manifest) {
    if (path.empty()) throw Error(ErrorKind::Configuration, "--trace is required");
    manifest.input(path);
    return read_trace_file(path);
}

void write_output(const std::string& path, const std::string& content, Manifest& manifest) {
    write_file_atomic(path, content);
    manifest.output(path);
}

// ---------------------------------------------------------------------------
// Commands

struct Common {
    std::string out;
    std::string manifest;
    std::uint64_t seed = 1;
};

struct GenArgs {
    std::size_t ues = 4;
    std::size_t sessions = 1;
    std::optional<std::size_t> records;
    bool reuse_tmsi = false;
};

void cmd_gen(const Common& c, const GenArgs& a, Manifest& m, std::ostream& out) {
    if (c.out.empty()) throw Error(ErrorKind::Configuration, "--out is required");
    BenignTraceConfig cfg;
    cfg.ues = a.ues;
    cfg.sessions_per_ue = a.sessions;
    cfg.max_records = a.records;
    cfg.reuse_tmsi = a.reuse_tmsi;
    cfg.seed = c.seed;
    m.config() = {{"ues", a.ues}, {"sessions_per_ue", a.sessions}, {"reuse_tmsi", a.reuse_tmsi},
                  {"records", a.records ? json(*a.records) : json(nullptr)}};
    m.seeds()["trace"] = c.seed;
    const auto trace = generate_benign_trace(cfg);
    write_trace_file(c.out, trace);
    m.output(c.out);
    out << "wrote " << trace.size() << " records to " << c.out << '\n';
}

struct InjectArgs {
    std::string trace;
    std::size_t count = 20;
    std::size_t min_gap = 10;
};

void cmd_inject(const Common& c, const InjectArgs& a, Manifest& m, std::ostream& out) {
    if (c.out.empty()) throw Error(ErrorKind::Configuration, "--out is required");
    const auto trace = load_trace(a.trace, m);
    InjectionConfig cfg;
    cfg.count = a.count;
    cfg.min_gap = a.min_gap;
    cfg.seed = c.seed;
    m.config() = {{"count", a.count}, {"min_gap", a.min_gap}};
    m.seeds()["injection"] = c.seed;
    const auto injected = inject_blind_dos(trace, cfg);
    write_trace_file(c.out, injected);
    m.output(c.out);
    out << "wrote " << injected.size() << " records (" << a.count << " attacks) to " << c.out << '\n';
}

struct MutateArgs {
    std::string trace;
    std::vector<std::size_t> select;
    std::size_t attacks = 2;
    std::size_t benign = 3;
};

void cmd_mutate(const Common& c, const MutateArgs& a, Manifest& m, std::ostream& out) {
    if (c.out.empty()) throw Error(ErrorKind::Configuration, "--out is required");
    const auto trace = load_trace(a.trace, m);
    auto selection = a.select;
    if (selection.empty()) {
        selection = select_for_mutation(trace, a.attacks, a.benign, c.seed);
        m.seeds()["selection"] = c.seed;
    }
    m.config() = {{"selection", selection}, {"attacks", a.attacks}, {"benign", a.benign}};
    const auto mutated = hypoglyph_mutate(trace, selection);
    write_trace_file(c.out, mutated);
    m.output(c.out);
    out << "mutated positions";
    for (auto p : selection) out << ' ' << p;
    out << '\n';
}

struct RunArgs {
    std::string trace;
    std::string window = "1";
    bool no_prev = false;
    std::string policy = "exclude";
    double bound_ms = 1000.0;
    std::string verdicts;
    std::string dump_windows;
};

void cmd_run(const Common& c, const RunArgs& a, const DetectorOptions& d, Manifest& m, std::ostream& out) {
    const auto range = parse_window_range(a.window);
    if (range.lo != range.hi) throw Error(ErrorKind::Configuration, "run takes a single window size");
    const auto policy = parse_unclassified_policy(a.policy);
    const auto trace = load_trace(a.trace, m);
    DetectorSetup setup(resolve_context(d, a.no_prev), m);
    auto detector = setup.make();

    m.config() = setup.resolved();
    m.config()["w"] = range.lo;
    m.config()["prev_retrieval"] = !a.no_prev;
    m.config()["unclassified_policy"] = a.policy;
    m.config()["bound_ms"] = a.bound_ms;

    TraceStore store;
    load(store, trace);
    PipelineConfig pc;
    pc.window = range.lo;
    pc.prev_retrieval = !a.no_prev;
    pc.max_in_flight = d.max_in_flight;

    std::ostringstream verdicts;
    std::ostringstream windows;
    const bool want_verdicts = !a.verdicts.empty();
    const bool want_windows = !a.dump_windows.empty();
    OutcomeSink sink;
    if (want_verdicts || want_windows) {
        sink = [&](const DetectionWindow& w, const WindowOutcome& o) {
            if (want_windows) {
                json lines = json::array();
                for (const auto& f : w.formatted()) lines.push_back(f.text);
                const auto prev = w.formatted_prev(d.transcript_compat);
                windows << json{{"new_seq", o.new_seq},
                                {"records", std::move(lines)},
                                {"prev", prev ? json(prev->text) : json(nullptr)}}
                               .dump()
                        << '\n';
            }
            if (want_verdicts) {
                json v = {{"seq", o.new_seq}, {"label", o.label == WindowLabel::Attacked ? "attacked" : "normal"}};
                if (const auto* verdict = std::get_if<Verdict>(&o.result)) {
                    v["verdict"] = std::string(to_string(verdict->cls));
                    v["latency_ms"] = verdict->latency.count();
                    v["explanation"] = verdict->explanation ? json(*verdict->explanation) : json(nullptr);
                } else {
                    const auto& f = std::get<DetectionFailure>(o.result);
                    v["verdict"] = nullptr;
                    v["error"] = f.message;
                    v["latency_ms"] = f.elapsed.count();
                }
                verdicts << v.dump() << '\n';
            }
        };
    }

    const auto start = Clock::now();
    const auto outcomes = run_pipeline(store, *detector, pc, sink);
    m.timing("detection", Clock::now() - start);

    RunSummary s;
    s.detector = detector->name();
    s.window = range.lo;
    s.windows = outcomes.size();
    for (const auto& o : outcomes) s.attacked_windows += o.label == WindowLabel::Attacked ? 1 : 0;
    s.counts = tally(outcomes, policy);
    if (s.counts.cells() > 0) s.metrics = metrics(s.counts);
    const auto lat = verdict_latencies(outcomes);
    if (!lat.empty()) s.latency = latency_stats(lat, Millis{a.bound_ms});

    out << "windows=" << s.windows << " attacked=" << s.attacked_windows << " w=" << s.window
        << " detector=" << s.detector << '\n';
    print_counts(out, s.counts);
    if (s.metrics) out << metrics_line(*s.metrics) << '\n';
    if (s.latency) print_latency(out, *s.latency, setup.is_oracle());

    if (want_verdicts) write_output(a.verdicts, verdicts.str(), m);
    if (want_windows) write_output(a.dump_windows, windows.str(), m);
    if (!c.out.empty()) write_output(c.out, to_json(s) + "\n", m);
    if (!s.metrics) throw Error(ErrorKind::UndefinedMetrics, "no window received a Normal or Anomalous verdict");
}

struct SweepArgs {
    std::string trace;
    std::string window = "1..10";
    bool no_prev = false;
    std::string policy = "exclude";
    double bound_ms = 1000.0;
    std::string summary;
    std::string dat;
};

void cmd_sweep(const Common& c, const SweepArgs& a, const DetectorOptions& d, Manifest& m, std::ostream& out) {
    const auto range = parse_window_range(a.window);
    const auto trace = load_trace(a.trace, m);
    DetectorSetup setup(resolve_context(d, a.no_prev), m);

    SweepConfig cfg;
    cfg.w_min = range.lo;
    cfg.w_max = range.hi;
    cfg.prev_retrieval = !a.no_prev;
    cfg.max_in_flight = d.max_in_flight;
    cfg.policy = parse_unclassified_policy(a.policy);
    cfg.latency_bound = Millis{a.bound_ms};
    m.config() = setup.resolved();
    m.config()["w_range"] = {range.lo, range.hi};
    m.config()["prev_retrieval"] = cfg.prev_retrieval;
    m.config()["unclassified_policy"] = a.policy;
    m.config()["bound_ms"] = a.bound_ms;

    const auto start = Clock::now();
    const auto rows = sweep(trace, [&] { return setup.make(); }, cfg);
    m.timing("sweep", Clock::now() - start);

    const auto csv = sweep_csv(rows);
    if (c.out.empty()) {
        out << csv;
    } else {
        write_output(c.out, csv, m);
        out << "wrote " << rows.size() << " rows to " << c.out << '\n';
    }
    if (!a.summary.empty()) write_output(a.summary, to_json(rows) + "\n", m);
    if (!a.dat.empty()) write_output(a.dat, sweep_dat(rows), m);
}

struct LintArgs {
    bool complete = false;
};

void cmd_lint(const Common& c, const LintArgs& a, const std::string& desc, Manifest& m, std::ostream& out) {
    if (desc.empty()) throw Error(ErrorKind::Configuration, "--desc is required");
    m.input(desc);
    m.config() = {{"desc", desc}, {"complete", a.complete}};
    auto descs = read_descriptions(desc);
    std::vector<LintedDescription> completed;
    for (std::size_t i = 0; i < descs.size(); ++i) {
        const auto& d = descs[i];
        out << i << '\t' << to_string(d.group) << '\t' << (d.coverage.to_string().empty() ? "-" : d.coverage.to_string())
            << '\t' << d.description.name();
        if (d.annotated_group) out << "\tannotated=" << *d.annotated_group;
        out << '\n';
        if (a.complete) {
            auto done = lint(complete_description(d.description, d.coverage));
            out << "  completed\t" << to_string(done.group) << '\t' << done.coverage.to_string() << '\t'
                << done.description.body() << '\n';
            completed.push_back(std::move(done));
        }
    }
    if (!c.out.empty()) write_output(c.out, serialize_descriptions(a.complete ? completed : descs), m);
}

struct StudyArgs {
    std::string trace;
    std::string window = "1";
    std::size_t resamples = 2000;
    bool no_complete = false;
    std::string policy = "exclude";
};

void cmd_study(const Common& c, const StudyArgs& a, const DetectorOptions& d, Manifest& m, std::ostream& out) {
    if (d.desc.empty()) throw Error(ErrorKind::Configuration, "--desc is required");
    const auto range = parse_window_range(a.window);
    if (range.lo != range.hi) throw Error(ErrorKind::Configuration, "study takes a single window size");
    const auto trace = load_trace(a.trace, m);
    DetectorSetup setup(d, m);
    const auto descs = read_descriptions(d.desc);

    SensitivityConfig cfg;
    cfg.window = range.lo;
    cfg.max_in_flight = d.max_in_flight;
    cfg.compare_completed = !a.no_complete;
    cfg.bootstrap_resamples = a.resamples;
    cfg.seed = c.seed;
    cfg.policy = parse_unclassified_policy(a.policy);
    m.config() = setup.resolved();
    m.config()["w"] = range.lo;
    m.config()["resamples"] = a.resamples;
    m.config()["compare_completed"] = cfg.compare_completed;
    m.seeds()["bootstrap"] = c.seed;

    const auto start = Clock::now();
    const auto report = sensitivity_study(descs, trace, [&](const AttackDescription& ad) { return setup.make(ad); }, cfg);
    m.timing("study", Clock::now() - start);

    for (const auto& g : report.groups) {
        out << "group " << to_string(g.group) << " n=" << g.n << " mean_f1=" << fixed(g.mean_f1, 3)
            << " median_f1=" << fixed(g.median_f1, 3) << " p10_f1=" << fixed(g.p10_f1, 3)
            << " ci95=[" << fixed(g.ci95.lo, 3) << ',' << fixed(g.ci95.hi, 3) << "]\n";
    }
    auto corr = [&](const char* name, const CorrelationResult& r) {
        out << name << '=' << (r.value ? fixed(*r.value, 3) : "undefined");
        if (r.error) out << " (" << *r.error << ')';
        out << '\n';
    };
    corr("spearman_predicates", report.spearman_predicates);
    corr("kendall_predicates", report.kendall_predicates);
    corr("spearman_length", report.spearman_length);
    if (report.mean_f1_before) {
        out << "completion mean_f1_before=" << fixed(*report.mean_f1_before, 3)
            << " mean_f1_after=" << fixed(*report.mean_f1_after, 3) << '\n';
    }
    if (!c.out.empty()) write_output(c.out, to_json(report) + "\n", m);
}

void cmd_report(const Common& c, const std::string& summary, Manifest& m, std::ostream& out) {
    if (summary.empty()) throw Error(ErrorKind::Configuration, "--summary is required");
    if (c.out.empty()) throw Error(ErrorKind::Configuration, "--out directory is required");
    m.input(summary);
    m.config() = {{"summary", summary}, {"out", c.out}};
    for (const auto& p : render_report(read_file(summary), c.out)) {
        m.output(p);
        out << "wrote " << p.string() << '\n';
    }
}

struct ExtractArgs {
    std::string source;
    std::size_t samples = 25;
    std::string attack = "Blind DoS";
};

void cmd_extract(const Common& c, const ExtractArgs& a, const DetectorOptions& d, Manifest& m, std::ostream& out) {
    if (a.source.empty()) throw Error(ErrorKind::Configuration, "--source is required");
    if (d.detector == "oracle") throw Error(ErrorKind::Configuration, "extract needs a chat or mock backend");
    m.input(a.source);
    DetectorSetup setup(d, m);
    ExtractionConfig cfg;
    cfg.attack_name = a.attack;
    cfg.model = setup.backend_config().model;
    cfg.samples = a.samples;
    cfg.max_in_flight = d.max_in_flight;
    m.config() = setup.resolved();
    m.config()["samples"] = a.samples;
    m.config()["attack"] = a.attack;

    const auto start = Clock::now();
    const auto descs = extract_description(read_file(a.source), *setup.backend(), cfg);
    m.timing("extract", Clock::now() - start);
    for (std::size_t i = 0; i < descs.size(); ++i) {
        out << i << '\t' << to_string(descs[i].group) << '\t' << descs[i].coverage.to_string() << '\n';
    }
    if (!c.out.empty()) write_output(c.out, serialize_descriptions(descs), m);
}

void add_common(CLI::App* cmd, Common& c, bool seed) {
    cmd->add_option("--out", c.out, "output path");
    cmd->add_option("--manifest", c.manifest, "manifest path (default <out>.manifest.json)");
    if (seed) cmd->add_option("--seed", c.seed, "64-bit seed")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Layer-3 Blind DoS detection toolkit", "l3det"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    Common common;
    DetectorOptions det;

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a shuffled benign trace");
    add_common(gen_cmd, common, true);
    gen_cmd->add_option("--ues", gen.ues, "number of UEs")->capture_default_str();
    gen_cmd->add_option("--sessions", gen.sessions, "sessions per UE")->capture_default_str();
    gen_cmd->add_option("--records", gen.records, "truncate the trace to this many records");
    gen_cmd->add_flag("--reuse-tmsi", gen.reuse_tmsi, "reconnecting sessions present their previous TMSI");

    InjectArgs inject;
    auto* inject_cmd = app.add_subcommand("inject", "inject Blind DoS records into a trace");
    add_common(inject_cmd, common, true);
    inject_cmd->add_option("--trace", inject.trace, "input trace")->required();
    inject_cmd->add_option("--count", inject.count, "attacks to inject")->capture_default_str();
    inject_cmd->add_option("--min-gap", inject.min_gap, "minimum spacing of attacks")->capture_default_str();

    MutateArgs mutate;
    auto* mutate_cmd = app.add_subcommand("mutate", "substitute confusable characters in selected records");
    add_common(mutate_cmd, common, true);
    mutate_cmd->add_option("--trace", mutate.trace, "input trace")->required();
    mutate_cmd->add_option("--select", mutate.select, "record positions to mutate")->delimiter(',');
    mutate_cmd->add_option("--attacks", mutate.attacks, "attack records to pick at random")->capture_default_str();
    mutate_cmd->add_option("--benign", mutate.benign, "benign records to pick at random")->capture_default_str();

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "detect over a trace at one window size");
    add_common(run_cmd, common, false);
    add_detector_options(run_cmd, det);
    run_cmd->add_option("--trace", run_args.trace, "input trace")->required();
    run_cmd->add_option("--w", run_args.window, "window size")->capture_default_str();
    run_cmd->add_flag("--no-prev", run_args.no_prev, "disable previous same-TMSI retrieval");
    run_cmd->add_option("--unclassified-policy", run_args.policy, "exclude | pessimistic")->capture_default_str();
    run_cmd->add_option("--bound-ms", run_args.bound_ms, "latency bound")->capture_default_str();
    run_cmd->add_option("--verdicts", run_args.verdicts, "write per-window verdicts (JSON lines)");
    run_cmd->add_option("--dump-windows", run_args.dump_windows, "write formatted windows (JSON lines)");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "detect at every window size of a range");
    add_common(sweep_cmd, common, false);
    add_detector_options(sweep_cmd, det);
    sweep_cmd->add_option("--trace", sweep_args.trace, "input trace")->required();
    sweep_cmd->add_option("--w,--w-range", sweep_args.window, "window range A..B")->capture_default_str();
    sweep_cmd->add_flag("--no-prev", sweep_args.no_prev, "disable previous same-TMSI retrieval");
    sweep_cmd->add_option("--unclassified-policy", sweep_args.policy, "exclude | pessimistic")->capture_default_str();
    sweep_cmd->add_option("--bound-ms", sweep_args.bound_ms, "latency bound")->capture_default_str();
    sweep_cmd->add_option("--summary", sweep_args.summary, "write the JSON summary here");
    sweep_cmd->add_option("--dat", sweep_args.dat, "write a gnuplot data file here");

    LintArgs lint_args;
    std::string lint_desc;
    auto* lint_cmd = app.add_subcommand("lint", "predicate coverage and alignment group of descriptions");
    add_common(lint_cmd, common, false);
    lint_cmd->add_option("--desc", lint_desc, "description file (JSON lines)")->required();
    lint_cmd->add_flag("--complete", lint_args.complete, "also show each completed description");

    StudyArgs study_args;
    auto* study_cmd = app.add_subcommand("study", "description sensitivity study");
    add_common(study_cmd, common, true);
    add_detector_options(study_cmd, det);
    study_cmd->add_option("--trace", study_args.trace, "input trace")->required();
    study_cmd->add_option("--w", study_args.window, "window size")->capture_default_str();
    study_cmd->add_option("--resamples", study_args.resamples, "bootstrap resamples")->capture_default_str();
    study_cmd->add_flag("--no-complete", study_args.no_complete, "skip the completed-description runs");
    study_cmd->add_option("--unclassified-policy", study_args.policy, "exclude | pessimistic")->capture_default_str();

    std::string summary;
    auto* report_cmd = app.add_subcommand("report", "render a JSON summary to CSV and data files");
    add_common(report_cmd, common, false);
    report_cmd->add_option("--summary", summary, "summary JSON from run, sweep or study")->required();

    ExtractArgs extract;
    auto* extract_cmd = app.add_subcommand("extract", "ask a backend for attack descriptions");
    add_common(extract_cmd, common, false);
    add_detector_options(extract_cmd, det);
    extract_cmd->add_option("--source", extract.source, "attack material (text file)")->required();
    extract_cmd->add_option("--samples", extract.samples, "descriptions to request")->capture_default_str();
    extract_cmd->add_option("--attack", extract.attack, "attack name")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        err << "error[usage]: " << msg << '\n';
        return kExitUsage;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    Manifest manifest(name);
    const auto start = Clock::now();
    try {
        if (chosen == gen_cmd) cmd_gen(common, gen, manifest, out);
        else if (chosen == inject_cmd) cmd_inject(common, inject, manifest, out);
        else if (chosen == mutate_cmd) cmd_mutate(common, mutate, manifest, out);
        else if (chosen == run_cmd) cmd_run(common, run_args, det, manifest, out);
        else if (chosen == sweep_cmd) cmd_sweep(common, sweep_args, det, manifest, out);
        else if (chosen == lint_cmd) cmd_lint(common, lint_args, lint_desc, manifest, out);
        else if (chosen == study_cmd) cmd_study(common, study_args, det, manifest, out);
        else if (chosen == report_cmd) cmd_report(common, summary, manifest, out);
        else if (chosen == extract_cmd) cmd_extract(common, extract, det, manifest, out);
        manifest.timing("total", Clock::now() - start);
        manifest.write(manifest_path(common.manifest, common.out, name));
    } catch (const Error& e) {
        err << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        err << "error[internal]: " << e.what() << '\n';
        return kExitError;
    }
    return kExitOk;
}

}  // namespace l3det::cli
