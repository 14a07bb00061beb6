#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace l3det {

/// Canonical Layer-3 message names, with an escape for anything else.
///
/// NAS and RRC both have a "security mode" exchange whose raw names differ
/// only in capitalisation; canonicalisation gives them distinct prefixes so a
/// language model cannot confuse them.
class MessageType {
public:
    enum class Kind : std::uint8_t {
        RRCSetupRequest,
        RRCSetup,
        RRCSetupComplete,
        RegistrationRequest,
        AuthenticationRequest,
        AuthenticationResponse,
        NAS_SecurityModeCommand,
        NAS_SecurityModeComplete,
        RRC_SecurityModeCommand,
        RRC_SecurityModeComplete,
        RegistrationAccept,
        Other,
    };

    static constexpr std::size_t kCanonicalCount = 11;

    MessageType() noexcept : kind_(Kind::RRCSetupRequest) {}
    /// Implicit from a canonical kind. Kind::Other needs text; use canonicalize().
    MessageType(Kind kind);  // NOLINT(google-explicit-constructor)

    /// Maps raw message text to a type. Never yields Other(canonical name).
    /// Throws Error{MalformedRecord} on empty input.
    static MessageType canonicalize(std::string_view raw);

    Kind kind() const noexcept { return kind_; }
    bool is_other() const noexcept { return kind_ == Kind::Other; }
    bool is(Kind k) const noexcept { return kind_ == k; }

    /// Canonical name, or the verbatim text for Other.
    std::string_view name() const noexcept;

    friend bool operator==(const MessageType&, const MessageType&) = default;

private:
    MessageType(Kind kind, std::string other) : kind_(kind), other_(std::move(other)) {}

    Kind kind_;
    std::string other_;
};

std::string_view canonical_name(MessageType::Kind kind) noexcept;

/// Every canonical (non-Other) kind in declaration order.
std::span<const MessageType::Kind> canonical_kinds() noexcept;

inline MessageType canonicalize_message_type(std::string_view raw) {
    return MessageType::canonicalize(raw);
}

/// 16-bit radio network temporary identifier.
struct Rnti {
    std::uint16_t value = 0;
    friend auto operator<=>(const Rnti&, const Rnti&) = default;
};

/// 32-bit temporary mobile subscriber identity. Zero is the "unassigned"
/// sentinel and never identifies a UE.
struct Tmsi {
    std::uint32_t value = 0;
    bool is_assigned() const noexcept { return value != 0; }
    friend auto operator<=>(const Tmsi&, const Tmsi&) = default;
};

inline constexpr Tmsi kUnassignedTmsi{0};

/// Ground-truth label. Simulation metadata only.
class GroundTruth {
public:
    enum class Kind : std::uint8_t { Benign, BlindDos, OtherAttack };

    static GroundTruth benign() { return GroundTruth(Kind::Benign, {}); }
    static GroundTruth blind_dos() { return GroundTruth(Kind::BlindDos, {}); }
    /// Throws Error{MalformedRecord} when name is empty.
    static GroundTruth other_attack(std::string name);

    /// Inverse of to_text(): "benign", "blind_dos", anything else is OtherAttack.
    static GroundTruth from_text(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    bool is_attack() const noexcept { return kind_ != Kind::Benign; }
    const std::string& attack_name() const noexcept { return name_; }
    std::string to_text() const;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;

private:
    GroundTruth(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

    Kind kind_;
    std::string name_;
};

using Seq = std::uint64_t;

struct TelemetryRecord {
    Seq seq = 0;
    std::string ue_id;
    MessageType msg_type;
    Rnti rnti;
    Tmsi tmsi;
    GroundTruth label = GroundTruth::benign();

    friend bool operator==(const TelemetryRecord&, const TelemetryRecord&) = default;
};

using Trace = std::vector<TelemetryRecord>;

/// What the detector path is allowed to see: no UE tag, no label.
struct RecordView {
    Seq seq = 0;
    MessageType msg_type;
    Rnti rnti;
    Tmsi tmsi;

    friend bool operator==(const RecordView&, const RecordView&) = default;
};

inline RecordView strip(const TelemetryRecord& r) {
    return RecordView{r.seq, r.msg_type, r.rnti, r.tmsi};
}

std::vector<RecordView> strip_labels(std::span<const TelemetryRecord> trace);

/// Renumbers seq to 0..N-1 in place.
void renumber(Trace& trace) noexcept;

}  // namespace l3det
