#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "l3det/backend.hpp"
#include "l3det/preprocess.hpp"

namespace l3det {

/// A named attack and a short natural-language account of it.
class AttackDescription {
public:
    /// Throws Error{Configuration} when body is blank or carries chat-template
    /// tokens or role markers.
    AttackDescription(std::string name, std::string body);

    const std::string& name() const noexcept { return name_; }
    const std::string& body() const noexcept { return body_; }

    friend bool operator==(const AttackDescription&, const AttackDescription&) = default;

private:
    std::string name_;
    std::string body_;
};

/// Expert-written Blind DoS description used when none is supplied.
const AttackDescription& default_blind_dos_description();

enum class PromptMode { ZeroShot, GenericCot, CustomCot };

std::string_view to_string(PromptMode mode) noexcept;
/// Accepts zeroshot | generic-cot | custom-cot. Throws Error{Configuration}.
PromptMode parse_prompt_mode(std::string_view text);

struct PromptOptions {
    /// Ask for a concise reason alongside an Anomalous verdict.
    bool explain = false;
    /// Also mark the previous-message line with " (New message)", as in the
    /// published prompt transcripts.
    bool transcript_compat = false;
};

/// Role-tagged chat messages. Exactly one System message, and it comes first.
class PromptBundle {
public:
    /// Throws Error{Configuration} if the role invariant does not hold.
    explicit PromptBundle(std::vector<ChatMessage> messages);

    const std::vector<ChatMessage>& messages() const noexcept { return messages_; }
    std::size_t count(Role role) const noexcept;

    /// The `messages` array of the chat-completion wire format.
    std::string to_json() const;
    static PromptBundle from_json(std::string_view json);

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;

private:
    std::vector<ChatMessage> messages_;
};

PromptBundle build_prompt(const DetectionWindow& window, const AttackDescription& description,
                          PromptMode mode, const PromptOptions& options = {});

// ---------------------------------------------------------------------------
// Description quality

enum class Predicate : std::size_t {
    TriggerMessage = 0,  // P1: names RRCSetupRequest
    MentionsTmsi,        // P2
    TmsiBoundToVictim,   // P3: in-use / victim / legitimate / existing
    Impersonation,       // P4: spoof / impersonate / reuse / assume / hijack
    RntiDiffers,         // P5
    NoIntegrity,         // P6: lack of integrity protection
};

inline constexpr std::size_t kPredicateCount = 6;

struct PredicateCoverage {
    std::array<bool, kPredicateCount> satisfied{};

    bool has(Predicate p) const noexcept { return satisfied[static_cast<std::size_t>(p)]; }
    void set(Predicate p, bool v = true) noexcept { satisfied[static_cast<std::size_t>(p)] = v; }

    /// Satisfied predicates among those used for grouping (all but P5).
    std::size_t grouping_count() const noexcept;
    /// e.g. "P1,P2,P3,P5"; empty string when none.
    std::string to_string() const;

    static PredicateCoverage of(std::initializer_list<Predicate> ps);

    friend bool operator==(const PredicateCoverage&, const PredicateCoverage&) = default;
};

/// Case-insensitive lexicon matching. P5 and P6 need both halves of the
/// pairing in the same sentence.
PredicateCoverage lint_description(std::string_view body);

enum class AlignmentGroup { Directly, Closely, Somewhat, Not };

inline constexpr std::array<AlignmentGroup, 4> kAlignmentGroups = {
    AlignmentGroup::Directly, AlignmentGroup::Closely, AlignmentGroup::Somewhat,
    AlignmentGroup::Not};

std::string_view to_string(AlignmentGroup group) noexcept;
std::optional<AlignmentGroup> parse_alignment_group(std::string_view text) noexcept;

/// First match of: Directly P1&P2&P3&P4; Closely P1&P2&(P3|P4);
/// Somewhat P1&(P2|P3|P4|P6); otherwise Not. P5 plays no part.
AlignmentGroup classify_alignment(const PredicateCoverage& coverage) noexcept;

/// Appends a fixed clause for each of P1..P4 that `coverage` lacks.
AttackDescription complete_description(const AttackDescription& description,
                                       const PredicateCoverage& coverage);
AttackDescription complete_description(const AttackDescription& description);

struct LintedDescription {
    AttackDescription description;
    PredicateCoverage coverage;
    AlignmentGroup group = AlignmentGroup::Not;
    /// Group recorded in the source file, if any.
    std::optional<std::string> annotated_group;
};

LintedDescription lint(const AttackDescription& description);

/// Length in whitespace-separated words.
std::size_t description_length(std::string_view body);

/// JSON lines: {"name": .., "body": .., "group"?: ..}
std::vector<LintedDescription> read_descriptions(const std::filesystem::path& path);
std::string serialize_descriptions(const std::vector<LintedDescription>& descriptions);

struct ExtractionConfig {
    std::string attack_name = "Blind DoS";
    std::string model;
    std::size_t samples = 25;
    double temperature = 1.0;
    int max_tokens = 256;
    std::size_t max_in_flight = 4;
};

/// The summarisation request sent for each sample.
ChatRequest extraction_request(std::string_view source_text, const ExtractionConfig& config);

/// Asks the backend `samples` times for a concise description of the attack
/// in `source_text` and lints each answer. Results keep request order.
/// Throws Error{Configuration} on blank source, BackendError (with the
/// request index) when a call fails or returns nothing usable.
std::vector<LintedDescription> extract_description(std::string_view source_text, ChatBackend& backend,
                                                   const ExtractionConfig& config);

}  // namespace l3det
