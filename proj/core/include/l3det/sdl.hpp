#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l3det/model.hpp"

namespace l3det {

// ---------------------------------------------------------------------------
// Shared data layer

/// Read position of one consumer. Cursors are values owned by their reader.
struct PollCursor {
    /// Seq of the last delivered record; nullopt before the first delivery.
    std::optional<Seq> position;

    friend bool operator==(const PollCursor&, const PollCursor&) = default;
};

struct PollBatch {
    std::vector<TelemetryRecord> records;
    PollCursor cursor;
};

/// Append-only telemetry store.
///
/// One writer appends; any number of readers poll concurrently with private
/// cursors. Records live in fixed-size segments that never move, and the
/// record count is published with release semantics after each append, so
/// readers take no lock and never block the writer.
class TraceStore {
public:
    static constexpr std::size_t kSegmentSize = 4096;
    static constexpr std::size_t kMaxSegments = 4096;
    static constexpr std::size_t kCapacity = kSegmentSize * kMaxSegments;

    TraceStore();
    ~TraceStore();
    TraceStore(const TraceStore&) = delete;
    TraceStore& operator=(const TraceStore&) = delete;

    /// Stores a copy of `record` with seq overwritten to the next counter
    /// value and returns that seq. Single writer only.
    Seq append(TelemetryRecord record);

    /// Up to `max` records with seq past the cursor, in seq order.
    /// Throws Error{Configuration} when max is zero.
    PollBatch poll(const PollCursor& cursor, std::size_t max) const;

    std::size_t size() const noexcept { return size_.load(std::memory_order_acquire); }
    Seq next_seq() const noexcept { return static_cast<Seq>(size()); }

    /// Copy of everything appended so far.
    Trace snapshot() const;

private:
    using Segment = std::array<TelemetryRecord, kSegmentSize>;

    const TelemetryRecord& at(std::size_t index) const noexcept;

    std::unique_ptr<std::unique_ptr<Segment>[]> segments_;
    std::atomic<std::size_t> size_{0};
};

TraceStore& load(TraceStore& store, const Trace& trace);

// ---------------------------------------------------------------------------
// Trace generation

/// How a template step touches the UE's temporary identity.
enum class IdentityAction : std::uint8_t {
    /// Carries the identity presented at setup (prior TMSI or the sentinel).
    Presented,
    /// Binds a fresh TMSI, or re-confirms the prior one on reconnection.
    AssignFresh,
};

struct SessionStep {
    MessageType::Kind msg;
    IdentityAction identity;
};

/// Benign initial access + registration: RRC setup, registration request,
/// authentication, NAS then RRC security mode, registration accept.
std::span<const SessionStep> benign_session_template() noexcept;

/// One benign session for `ue`. All records share one fresh RNTI and are
/// labelled Benign; seq is 0..10 (renumbered when merged). Deterministic in
/// (ue, prior_tmsi, seed).
Trace generate_session(const std::string& ue, std::optional<Tmsi> prior_tmsi, std::uint64_t seed);

/// Uniformly random merge of per-UE ordered traces. Every input keeps its
/// internal order; seq is renumbered 0..N-1.
Trace interleave_shuffle(const std::vector<Trace>& per_ue_traces, std::uint64_t seed);

struct BenignTraceConfig {
    std::size_t ues = 4;
    std::size_t sessions_per_ue = 1;
    /// Reconnecting sessions present the TMSI bound by the UE's previous
    /// session. Off by default: under the three-feature view a legitimate
    /// reconnection is indistinguishable from the attack.
    bool reuse_tmsi = false;
    /// Truncate the merged trace to this many records.
    std::optional<std::size_t> max_records;
    std::uint64_t seed = 1;
};

/// Sessions per UE concatenated, then interleaved. Fresh TMSIs are unique
/// across the whole trace.
Trace generate_benign_trace(const BenignTraceConfig& config);

struct InjectionConfig {
    std::size_t count = 20;
    /// Minimum distance between injected attacks, and from both trace ends,
    /// in final positions. Zero disables spacing.
    std::size_t min_gap = 10;
    std::uint64_t seed = 1;
};

/// Adds `count` spoofed RRCSetupRequests, each reusing a distinct TMSI bound
/// earlier in the trace with a fresh RNTI different from the victim's, and
/// inserted after the victim's binding record.
/// Throws Error{InjectionCapacity} when the trace cannot host the attacks.
Trace inject_blind_dos(const Trace& trace, const InjectionConfig& config);

/// Injective map of Latin code points to visually confusable ones.
class HypoglyphMap {
public:
    /// Throws Error{Configuration} if not injective or an entry maps to itself.
    explicit HypoglyphMap(std::map<char32_t, char32_t> forward);

    /// C -> U+0421, e -> U+0435, q -> U+055B.
    static const HypoglyphMap& default_map();

    const std::map<char32_t, char32_t>& forward() const noexcept { return forward_; }
    const std::map<char32_t, char32_t>& inverse() const noexcept { return inverse_; }

private:
    std::map<char32_t, char32_t> forward_;
    std::map<char32_t, char32_t> inverse_;
};

/// Text with every mapped code point substituted.
std::string apply_hypoglyphs(std::string_view text, const HypoglyphMap& map);

/// Substitutes confusables in the message-type text of the records at the
/// given positions. Labels and all other fields are untouched.
/// Throws Error{Selection} on positions outside the trace.
Trace hypoglyph_mutate(const Trace& trace, std::span<const std::size_t> selection,
                       const HypoglyphMap& map = HypoglyphMap::default_map());

/// Random selection of `attacks` BlindDos positions and `benign` Benign
/// positions, sorted ascending. Throws Error{Selection} if too few exist.
std::vector<std::size_t> select_for_mutation(const Trace& trace, std::size_t attacks,
                                             std::size_t benign, std::uint64_t seed);

}  // namespace l3det
