#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "l3det/backend.hpp"
#include "l3det/preprocess.hpp"
#include "l3det/prompting.hpp"
#include "l3det/sdl.hpp"

namespace l3det {

using Millis = std::chrono::duration<double, std::milli>;

struct BackendConfig {
    std::string endpoint;
    std::string model = "meta-llama/Llama-3.1-8B-Instruct";
    double temperature = 0.0;
    int max_output_tokens = 64;
    std::chrono::milliseconds request_timeout{10'000};
    bool explanation_enabled = false;
};

enum class VerdictClass { Normal, Anomalous, Unclassified };

std::string_view to_string(VerdictClass c) noexcept;

struct Verdict {
    VerdictClass cls = VerdictClass::Unclassified;
    std::optional<std::string> explanation;
    Millis latency{0};
    std::string raw;
};

struct ParsedResponse {
    VerdictClass cls = VerdictClass::Unclassified;
    std::optional<std::string> explanation;
};

/// Earliest whole-word "anomalous" or "normal" (any case) decides the class.
/// After an Anomalous token the rest of the text, trimmed of leading
/// punctuation and whitespace, is the explanation. Total.
ParsedResponse parse_response(std::string_view text);

/// Sends the bundle, times the round trip, parses the answer. The explanation
/// is kept only for Anomalous verdicts with explanations enabled.
/// Throws Error{Configuration} if config.temperature is not 0, and
/// BackendError (carrying elapsed time) on transport failure.
Verdict detect(const PromptBundle& bundle, ChatBackend& backend, const BackendConfig& config);

/// Maps every confusable code point back to its Latin source. Idempotent.
std::string normalize_confusables(std::string_view text,
                                  const HypoglyphMap& map = HypoglyphMap::default_map());

/// Message type with confusables folded back before canonicalisation.
MessageType normalized_type(const MessageType& type,
                            const HypoglyphMap& map = HypoglyphMap::default_map());

// ---------------------------------------------------------------------------
// Rule oracle

/// Incremental Blind DoS rule: a record is an attack when it is an
/// RRCSetupRequest (after confusable folding) with an assigned TMSI that an
/// earlier record carried under a different RNTI.
class BlindDosIndex {
public:
    explicit BlindDosIndex(const HypoglyphMap& map = HypoglyphMap::default_map()) : map_(&map) {}

    /// Evaluates the rule for `record` against everything observed so far,
    /// then records it. Returns the rule outcome.
    bool observe(const RecordView& record);

    /// Outcome for an already observed seq; nullopt if never observed.
    std::optional<bool> flagged(Seq seq) const;

    std::size_t observed() const noexcept { return flags_.size(); }

private:
    struct Identity {
        std::uint16_t first_rnti = 0;
        bool multiple_rntis = false;
    };

    const HypoglyphMap* map_;
    std::unordered_map<std::uint32_t, Identity> by_tmsi_;
    std::unordered_map<Seq, bool> flags_;
};

/// Rule verdict for the window's new record given every earlier record.
/// Never Unclassified; latency is the compute time.
Verdict oracle_detect(const DetectionWindow& window, std::span<const RecordView> trace_prefix,
                      const HypoglyphMap& map = HypoglyphMap::default_map());

// ---------------------------------------------------------------------------
// Window detectors

struct DetectionFailure {
    std::string message;
    Millis elapsed{0};
};

using DetectionResult = std::variant<Verdict, DetectionFailure>;

/// A classifier over detection windows.
///
/// The pipeline calls observe() for every record in stream order, and only
/// then classify() for windows ending at or before that record. classify()
/// may run concurrently with itself.
class WindowDetector {
public:
    virtual ~WindowDetector() = default;
    virtual void observe(const RecordView& /*record*/) {}
    virtual DetectionResult classify(const DetectionWindow& window) const = 0;
    virtual std::string name() const = 0;
    virtual bool supports_concurrency() const { return true; }
};

enum class OracleContext {
    /// Every earlier record in the stream.
    FullPrefix,
    /// Only what a prompt would carry: the window and the retrieved previous
    /// same-TMSI record.
    Visible,
};

enum class OracleScope {
    /// Judge the new record only.
    NewRecord,
    /// Anomalous when any member of the window triggers the rule.
    AnyMember,
};

class OracleDetector final : public WindowDetector {
public:
    explicit OracleDetector(OracleContext context = OracleContext::FullPrefix,
                            OracleScope scope = OracleScope::NewRecord,
                            const HypoglyphMap& map = HypoglyphMap::default_map());

    void observe(const RecordView& record) override;
    DetectionResult classify(const DetectionWindow& window) const override;
    std::string name() const override { return "oracle"; }

private:
    OracleContext context_;
    OracleScope scope_;
    const HypoglyphMap* map_;
    BlindDosIndex index_;
    mutable std::shared_mutex mutex_;
};

/// Builds a prompt per window and classifies it through a chat backend.
class LlmDetector final : public WindowDetector {
public:
    LlmDetector(ChatBackend& backend, BackendConfig config, AttackDescription description,
                PromptMode mode, bool transcript_compat = false);

    DetectionResult classify(const DetectionWindow& window) const override;
    std::string name() const override { return backend_->name(); }

    PromptBundle prompt_for(const DetectionWindow& window) const;

private:
    ChatBackend* backend_;
    BackendConfig config_;
    AttackDescription description_;
    PromptMode mode_;
    PromptOptions options_;
};

}  // namespace l3det
