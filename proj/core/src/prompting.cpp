#include "l3det/prompting.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "l3det/error.hpp"
#include "l3det/trace_io.hpp"

namespace l3det {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool has_template_tokens(std::string_view body) {
    static const std::regex role_marker(R"((^|\n)\s*(system|user|assistant)\s*:)", std::regex::icase);
    const std::string s(body);
    return s.find("<|") != std::string::npos || s.find("|>") != std::string::npos ||
           s.find("{{") != std::string::npos || s.find("}}") != std::string::npos ||
           std::regex_search(s, role_marker);
}

// "The adversary sends ..." reads "where the adversary sends ..." inside the
// system prompt. Acronyms and identifiers keep their case.
std::string inline_clause(std::string_view body) {
    std::string s(trim(body));
    while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
    if (s.size() >= 1 && std::isupper(static_cast<unsigned char>(s[0]))) {
        const bool single = s.size() == 1;
        const auto next = single ? ' ' : static_cast<unsigned char>(s[1]);
        if (single || !(std::isupper(next) || std::isdigit(next))) {
            s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
        }
    }
    return s;
}

constexpr std::string_view kPreamble = "You are an expert anomaly detecting assistant in the 5G context.";
constexpr std::string_view kFraming =
    "You are given a set of messages between a gNB and multiple UEs in chronological order.";
constexpr std::string_view kInstruction =
    "Remember, you must either say 'Normal' or 'Anomalous' without any explanation.";
constexpr std::string_view kInstructionExplain =
    "Remember, you must either say 'Normal' or 'Anomalous'. If you say 'Anomalous', also give a "
    "concise explanation of the reason.";
constexpr std::string_view kGenericCot = "Let's think step by step";
constexpr std::string_view kCustomCotSteps =
    "Step 1: Check explicitly if an RRCSetupRequest message exists (mandatory for Blind DoS attack "
    "detection).\n"
    "Step 2: Note the TMSI value used in this RRCSetupRequest.\n"
    "Step 3: Check if a previous RRCSetupRequest (or subsequent message) exists with the same TMSI "
    "but a different RNTI.\n"
    "Step 4: Classify the sequence explicitly as Anomalous if Step 3 condition is met and explain "
    "the reason. Otherwise classify as Normal.";

std::string system_prompt(const AttackDescription& d, bool explain) {
    std::string s;
    s += kPreamble;
    s += "\nYou know about the ";
    s += d.name();
    s += " attack, where ";
    s += inline_clause(d.body());
    s += ".\n";
    s += kFraming;
    s += "\nBased on the understanding of the given attack, you will need to determine whether the "
         "following message sequence contains a ";
    s += d.name();
    s += " attack or not.\n";
    s += explain ? kInstructionExplain : kInstruction;
    return s;
}

Role parse_role(std::string_view r) {
    if (r == "system") return Role::System;
    if (r == "user") return Role::User;
    if (r == "assistant") return Role::Assistant;
    throw Error(ErrorKind::Parse, "unknown role '" + std::string(r) + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// Descriptions and bundles

AttackDescription::AttackDescription(std::string name, std::string body)
    : name_(trim(name)), body_(trim(body)) {
    if (name_.empty()) throw Error(ErrorKind::Configuration, "attack description has no name");
    if (body_.empty()) throw Error(ErrorKind::Configuration, "attack description body is empty");
    if (has_template_tokens(body_) || has_template_tokens(name_)) {
        throw Error(ErrorKind::Configuration, "attack description contains template tokens or role markers");
    }
}

const AttackDescription& default_blind_dos_description() {
    static const AttackDescription d(
        "Blind DoS",
        "The adversary sends a RRCSetupRequest using a TMSI value of an existing connection and a new "
        "RNTI value.");
    return d;
}

std::string_view to_string(PromptMode mode) noexcept {
    switch (mode) {
        case PromptMode::ZeroShot: return "zeroshot";
        case PromptMode::GenericCot: return "generic-cot";
        case PromptMode::CustomCot: return "custom-cot";
    }
    return "zeroshot";
}

PromptMode parse_prompt_mode(std::string_view text) {
    if (text == "zeroshot") return PromptMode::ZeroShot;
    if (text == "generic-cot") return PromptMode::GenericCot;
    if (text == "custom-cot") return PromptMode::CustomCot;
    throw Error(ErrorKind::Configuration, "unknown prompt mode '" + std::string(text) + "'");
}

PromptBundle::PromptBundle(std::vector<ChatMessage> messages) : messages_(std::move(messages)) {
    if (messages_.empty() || messages_.front().role != Role::System) {
        throw Error(ErrorKind::Configuration, "prompt bundle must start with a system message");
    }
    if (count(Role::System) != 1) {
        throw Error(ErrorKind::Configuration, "prompt bundle must hold exactly one system message");
    }
}

std::size_t PromptBundle::count(Role role) const noexcept {
    return static_cast<std::size_t>(std::count_if(messages_.begin(), messages_.end(),
                                                  [role](const ChatMessage& m) { return m.role == role; }));
}

std::string PromptBundle::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& m : messages_) {
        arr.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    return arr.dump(2);
}

PromptBundle PromptBundle::from_json(std::string_view text) {
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("prompt bundle: ") + e.what());
    }
    if (!arr.is_array()) throw Error(ErrorKind::Parse, "prompt bundle must be a JSON array");
    std::vector<ChatMessage> messages;
    for (const auto& m : arr) {
        if (!m.is_object() || !m.contains("role") || !m.contains("content")) {
            throw Error(ErrorKind::Parse, "prompt bundle entries need role and content");
        }
        messages.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    }
    return PromptBundle(std::move(messages));
}

PromptBundle build_prompt(const DetectionWindow& window, const AttackDescription& description,
                          PromptMode mode, const PromptOptions& options) {
    std::vector<ChatMessage> messages;
    messages.push_back({Role::System, system_prompt(description, options.explain)});

    if (auto prev = window.formatted_prev(options.transcript_compat)) {
        messages.push_back({Role::User, "Previous message: " + prev->text});
    }

    std::string records;
    for (const auto& f : window.formatted()) {
        if (!records.empty()) records += '\n';
        records += f.text;
    }
    messages.push_back({Role::User, std::move(records)});

    switch (mode) {
        case PromptMode::ZeroShot:
            break;
        case PromptMode::GenericCot:
            messages.push_back({Role::Assistant, std::string(kGenericCot)});
            break;
        case PromptMode::CustomCot:
            messages.push_back({Role::Assistant, std::string(kGenericCot) + "\n" + std::string(kCustomCotSteps)});
            break;
    }
    return PromptBundle(std::move(messages));
}

// ---------------------------------------------------------------------------
// Predicates

namespace {

struct Lexicon {
    std::regex trigger{R"(rrc[\s_-]*setup[\s_-]*request)", std::regex::icase};
    std::regex tmsi{R"(tmsi|temporary\s+(mobile\s+)?(subscriber\s+)?identi|guti)", std::regex::icase};
    std::regex bound{
        R"(victim|legitimate|genuine|\bin[- ]use\b|existing|already[\s-]+(assigned|registered|connected|in[\s-]+use)|active\s+(connection|session|ue|user)|another\s+(ue|user|device|subscriber)|currently\s+(used|assigned))",
        std::regex::icase};
    std::regex impersonation{
        R"(spoof|impersonat|\bre-?us(e|es|ed|ing)\b|\bassum(e|es|ed|ing)\b|hijack|masquerad)",
        std::regex::icase};
    std::regex rnti{R"(rnti)", std::regex::icase};
    std::regex differs{R"(\b(new|different|differs?|differing|distinct|fresh|another|other)\b)",
                       std::regex::icase};
    std::regex integrity{R"(integrity)", std::regex::icase};
    std::regex absence{
        R"(\b(lack|lacks|lacking|absence|absent|without|no|not|missing|unprotected)\b)", std::regex::icase};
};

const Lexicon& lexicon() {
    static const Lexicon lex;
    return lex;
}

std::vector<std::string> sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        cur += c;
        const bool end_mark = (c == '.' || c == '!' || c == '?') &&
                              (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])));
        if (end_mark || c == '\n') {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!trim(cur).empty()) out.push_back(std::move(cur));
    return out;
}

bool any_sentence_with_both(const std::vector<std::string>& ss, const std::regex& a, const std::regex& b) {
    return std::any_of(ss.begin(), ss.end(), [&](const std::string& s) {
        return std::regex_search(s, a) && std::regex_search(s, b);
    });
}

}  // namespace

std::size_t PredicateCoverage::grouping_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t i = 0; i < kPredicateCount; ++i) {
        if (i != static_cast<std::size_t>(Predicate::RntiDiffers) && satisfied[i]) ++n;
    }
    return n;
}

std::string PredicateCoverage::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < kPredicateCount; ++i) {
        if (!satisfied[i]) continue;
        if (!out.empty()) out += ',';
        out += 'P';
        out += std::to_string(i + 1);
    }
    return out;
}

PredicateCoverage PredicateCoverage::of(std::initializer_list<Predicate> ps) {
    PredicateCoverage c;
    for (auto p : ps) c.set(p);
    return c;
}

PredicateCoverage lint_description(std::string_view body) {
    const auto& lex = lexicon();
    const std::string text(body);
    const auto ss = sentences(text);

    PredicateCoverage c;
    c.set(Predicate::TriggerMessage, std::regex_search(text, lex.trigger));
    c.set(Predicate::MentionsTmsi, std::regex_search(text, lex.tmsi));
    c.set(Predicate::TmsiBoundToVictim, std::regex_search(text, lex.bound));
    c.set(Predicate::Impersonation, std::regex_search(text, lex.impersonation));
    c.set(Predicate::RntiDiffers, any_sentence_with_both(ss, lex.rnti, lex.differs));
    c.set(Predicate::NoIntegrity, any_sentence_with_both(ss, lex.integrity, lex.absence));
    return c;
}

std::string_view to_string(AlignmentGroup group) noexcept {
    switch (group) {
        case AlignmentGroup::Directly: return "Directly";
        case AlignmentGroup::Closely: return "Closely";
        case AlignmentGroup::Somewhat: return "Somewhat";
        case AlignmentGroup::Not: return "Not";
    }
    return "Not";
}

std::optional<AlignmentGroup> parse_alignment_group(std::string_view text) noexcept {
    for (auto g : kAlignmentGroups) {
        if (text == to_string(g)) return g;
    }
    return std::nullopt;
}

AlignmentGroup classify_alignment(const PredicateCoverage& c) noexcept {
    const bool p1 = c.has(Predicate::TriggerMessage);
    const bool p2 = c.has(Predicate::MentionsTmsi);
    const bool p3 = c.has(Predicate::TmsiBoundToVictim);
    const bool p4 = c.has(Predicate::Impersonation);
    const bool p6 = c.has(Predicate::NoIntegrity);
    if (p1 && p2 && p3 && p4) return AlignmentGroup::Directly;
    if (p1 && p2 && (p3 || p4)) return AlignmentGroup::Closely;
    if (p1 && (p2 || p3 || p4 || p6)) return AlignmentGroup::Somewhat;
    return AlignmentGroup::Not;
}

AttackDescription complete_description(const AttackDescription& description, const PredicateCoverage& coverage) {
    static constexpr std::pair<Predicate, std::string_view> kClauses[] = {
        {Predicate::TriggerMessage, "The attack is triggered by an RRCSetupRequest message."},
        {Predicate::MentionsTmsi, "The RRCSetupRequest carries a TMSI."},
        {Predicate::TmsiBoundToVictim, "That TMSI is already in use by a legitimate victim UE."},
        {Predicate::Impersonation, "The attacker spoofs and reuses this TMSI to impersonate the victim."},
    };
    std::string body = description.body();
    bool changed = false;
    for (const auto& [p, clause] : kClauses) {
        if (coverage.has(p)) continue;
        if (!body.empty() && body.back() != '.' && body.back() != '!' && body.back() != '?') body += '.';
        body += ' ';
        body += clause;
        changed = true;
    }
    if (!changed) return description;
    return AttackDescription(description.name(), std::move(body));
}

AttackDescription complete_description(const AttackDescription& description) {
    return complete_description(description, lint_description(description.body()));
}

LintedDescription lint(const AttackDescription& description) {
    const auto coverage = lint_description(description.body());
    return LintedDescription{description, coverage, classify_alignment(coverage), std::nullopt};
}

std::size_t description_length(std::string_view body) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : body) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::vector<LintedDescription> read_descriptions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::vector<LintedDescription> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, "<description>", std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line_no, "<description>", "expected a JSON object");
        for (const char* f : {"name", "body"}) {
            if (!obj.contains(f)) throw ParseError(line_no, f, "missing mandatory field");
            if (!obj.at(f).is_string()) throw ParseError(line_no, f, "expected a string");
        }
        try {
            auto linted = lint(AttackDescription(obj.at("name").get<std::string>(), obj.at("body").get<std::string>()));
            if (obj.contains("group") && obj.at("group").is_string()) {
                linted.annotated_group = obj.at("group").get<std::string>();
            }
            out.push_back(std::move(linted));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(line_no, "body", e.what());
        }
    }
    return out;
}

std::string serialize_descriptions(const std::vector<LintedDescription>& descriptions) {
    std::string out;
    for (const auto& d : descriptions) {
        nlohmann::ordered_json obj = {{"name", d.description.name()}, {"body", d.description.body()}};
        obj["group"] = d.annotated_group ? *d.annotated_group : std::string(to_string(d.group));
        out += obj.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extraction

ChatRequest extraction_request(std::string_view source_text, const ExtractionConfig& config) {
    ChatRequest req;
    req.model = config.model;
    req.temperature = config.temperature;
    req.max_tokens = config.max_tokens;
    req.messages.push_back({Role::System, "You are a 5G security analyst who writes concise attack descriptions."});
    req.messages.push_back(
        {Role::User, "Read the following material about the " + config.attack_name +
                         " attack and describe how the attack works in at most three sentences. "
                         "Reply with the description only.\n\n" +
                         std::string(trim(source_text))});
    return req;
}

std::vector<LintedDescription> extract_description(std::string_view source_text, ChatBackend& backend,
                                                   const ExtractionConfig& config) {
    if (trim(source_text).empty()) throw Error(ErrorKind::Configuration, "attack source text is empty");
    if (config.samples == 0) return {};

    const ChatRequest request = extraction_request(source_text, config);
    std::vector<std::optional<LintedDescription>> results(config.samples);
    std::optional<BackendError> first_error;
    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};

    auto fail = [&](std::size_t index, const std::string& what, std::chrono::duration<double, std::milli> elapsed) {
        std::lock_guard lock(error_mutex);
        if (!first_error || *first_error->request_index() > index) {
            first_error.emplace("request " + std::to_string(index) + ": " + what, elapsed, index);
        }
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.samples) return;
            const auto start = std::chrono::steady_clock::now();
            try {
                std::string text = backend.complete(request);
                static const std::regex chat_token(R"(<\|[^|]*\|>)");
                text = std::regex_replace(text, chat_token, "");
                const auto body = trim(text);
                if (body.empty()) throw Error(ErrorKind::Backend, "empty description");
                results[i] = lint(AttackDescription(config.attack_name, std::string(body)));
            } catch (const BackendError& e) {
                fail(i, e.what(), e.elapsed());
            } catch (const std::exception& e) {
                fail(i, e.what(), std::chrono::steady_clock::now() - start);
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(config.max_in_flight, 1, config.samples);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (first_error) throw *first_error;

    std::vector<LintedDescription> out;
    out.reserve(results.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

}  // namespace l3det
