#include "l3det/detector.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "l3det/error.hpp"
#include "l3det/utf8.hpp"

namespace l3det {

namespace {

using Clock = std::chrono::steady_clock;

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool whole_word_at(std::string_view lower, std::size_t pos, std::string_view word) {
    if (lower.compare(pos, word.size(), word) != 0) return false;
    if (pos > 0 && is_word_char(lower[pos - 1])) return false;
    const auto end = pos + word.size();
    return end >= lower.size() || !is_word_char(lower[end]);
}

std::optional<std::string> explanation_after(std::string_view text) {
    std::size_t b = 0;
    while (b < text.size() && (std::ispunct(static_cast<unsigned char>(text[b])) ||
                               std::isspace(static_cast<unsigned char>(text[b])))) {
        ++b;
    }
    auto e = text.size();
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (e == b) return std::nullopt;
    return std::string(text.substr(b, e - b));
}

bool is_setup_request(const MessageType& type, const HypoglyphMap& map) {
    return normalized_type(type, map).is(MessageType::Kind::RRCSetupRequest);
}

/// The rule applied to `record` against an arbitrary context.
bool rule_fires(const RecordView& record, std::span<const RecordView> context, const HypoglyphMap& map) {
    if (!record.tmsi.is_assigned() || !is_setup_request(record.msg_type, map)) return false;
    return std::any_of(context.begin(), context.end(), [&](const RecordView& r) {
        return r.tmsi == record.tmsi && r.rnti != record.rnti;
    });
}

}  // namespace

std::string_view to_string(VerdictClass c) noexcept {
    switch (c) {
        case VerdictClass::Normal: return "Normal";
        case VerdictClass::Anomalous: return "Anomalous";
        case VerdictClass::Unclassified: return "Unclassified";
    }
    return "Unclassified";
}

ParsedResponse parse_response(std::string_view text) {
    std::string lower(text);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    static constexpr std::string_view kAnomalous = "anomalous";
    static constexpr std::string_view kNormal = "normal";
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (whole_word_at(lower, i, kAnomalous)) {
            return {VerdictClass::Anomalous, explanation_after(text.substr(i + kAnomalous.size()))};
        }
        if (whole_word_at(lower, i, kNormal)) return {VerdictClass::Normal, std::nullopt};
    }
    return {};
}

Verdict detect(const PromptBundle& bundle, ChatBackend& backend, const BackendConfig& config) {
    if (config.temperature != 0.0) {
        throw Error(ErrorKind::Configuration, "detection requires temperature 0");
    }
    ChatRequest request;
    request.model = config.model;
    request.temperature = config.temperature;
    request.max_tokens = config.max_output_tokens;
    request.messages = bundle.messages();

    const auto start = Clock::now();
    std::string raw;
    try {
        raw = backend.complete(request);
    } catch (const BackendError& e) {
        throw BackendError(e.what(), Clock::now() - start, e.request_index());
    }
    Verdict v;
    v.latency = Clock::now() - start;
    auto parsed = parse_response(raw);
    v.cls = parsed.cls;
    if (v.cls == VerdictClass::Anomalous && config.explanation_enabled) v.explanation = std::move(parsed.explanation);
    v.raw = std::move(raw);
    return v;
}

std::string normalize_confusables(std::string_view text, const HypoglyphMap& map) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : utf8::decode(text)) {
        const auto it = map.inverse().find(cp);
        utf8::append(out, it == map.inverse().end() ? cp : it->second);
    }
    return out;
}

MessageType normalized_type(const MessageType& type, const HypoglyphMap& map) {
    if (!type.is_other()) return type;
    return MessageType::canonicalize(normalize_confusables(type.name(), map));
}

// ---------------------------------------------------------------------------

bool BlindDosIndex::observe(const RecordView& record) {
    bool fires = false;
    if (record.tmsi.is_assigned()) {
        const auto it = by_tmsi_.find(record.tmsi.value);
        if (it != by_tmsi_.end()) {
            const auto& id = it->second;
            const bool other_rnti_seen = id.multiple_rntis || id.first_rnti != record.rnti.value;
            fires = other_rnti_seen && is_setup_request(record.msg_type, *map_);
            if (id.first_rnti != record.rnti.value) it->second.multiple_rntis = true;
        } else {
            by_tmsi_.emplace(record.tmsi.value, Identity{record.rnti.value, false});
        }
    }
    flags_.insert_or_assign(record.seq, fires);
    return fires;
}

std::optional<bool> BlindDosIndex::flagged(Seq seq) const {
    const auto it = flags_.find(seq);
    if (it == flags_.end()) return std::nullopt;
    return it->second;
}

Verdict oracle_detect(const DetectionWindow& window, std::span<const RecordView> trace_prefix,
                      const HypoglyphMap& map) {
    const auto start = Clock::now();
    Verdict v;
    v.cls = rule_fires(window.new_record(), trace_prefix, map) ? VerdictClass::Anomalous : VerdictClass::Normal;
    v.raw = std::string(to_string(v.cls));
    v.latency = Clock::now() - start;
    return v;
}

// ---------------------------------------------------------------------------

OracleDetector::OracleDetector(OracleContext context, OracleScope scope, const HypoglyphMap& map)
    : context_(context), scope_(scope), map_(&map), index_(map) {}

void OracleDetector::observe(const RecordView& record) {
    std::unique_lock lock(mutex_);
    index_.observe(record);
}

DetectionResult OracleDetector::classify(const DetectionWindow& window) const {
    const auto start = Clock::now();
    const auto& members = window.members;
    const std::size_t first = scope_ == OracleScope::AnyMember ? 0 : members.size() - 1;
    bool fires = false;

    if (context_ == OracleContext::FullPrefix) {
        std::shared_lock lock(mutex_);
        for (std::size_t i = first; i < members.size() && !fires; ++i) {
            const auto f = index_.flagged(members[i].seq);
            if (!f) {
                return DetectionFailure{"record " + std::to_string(members[i].seq) + " was not observed",
                                        Clock::now() - start};
            }
            fires = *f;
        }
    } else {
        std::vector<RecordView> context;
        context.reserve(members.size() + 1);
        if (window.prev_same_tmsi) context.push_back(*window.prev_same_tmsi);
        const auto base = context.size();
        context.insert(context.end(), members.begin(), members.end());
        for (std::size_t i = first; i < members.size() && !fires; ++i) {
            fires = rule_fires(members[i], std::span<const RecordView>(context).first(base + i), *map_);
        }
    }

    Verdict v;
    v.cls = fires ? VerdictClass::Anomalous : VerdictClass::Normal;
    v.raw = std::string(to_string(v.cls));
    v.latency = Clock::now() - start;
    return v;
}

LlmDetector::LlmDetector(ChatBackend& backend, BackendConfig config, AttackDescription description,
                         PromptMode mode, bool transcript_compat)
    : backend_(&backend), config_(std::move(config)), description_(std::move(description)), mode_(mode) {
    if (config_.temperature != 0.0) throw Error(ErrorKind::Configuration, "detection requires temperature 0");
    options_.explain = config_.explanation_enabled;
    options_.transcript_compat = transcript_compat;
}

PromptBundle LlmDetector::prompt_for(const DetectionWindow& window) const {
    return build_prompt(window, description_, mode_, options_);
}

DetectionResult LlmDetector::classify(const DetectionWindow& window) const {
    const auto start = Clock::now();
    try {
        return detect(prompt_for(window), *backend_, config_);
    } catch (const BackendError& e) {
        return DetectionFailure{e.what(), e.elapsed()};
    } catch (const Error& e) {
        return DetectionFailure{e.what(), Clock::now() - start};
    }
}

}  // namespace l3det
