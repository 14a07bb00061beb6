#include "l3det/model.hpp"

#include <array>

#include "l3det/error.hpp"

namespace l3det {

namespace {

using Kind = MessageType::Kind;

constexpr std::array<Kind, MessageType::kCanonicalCount> kKinds = {
    Kind::RRCSetupRequest,          Kind::RRCSetup,
    Kind::RRCSetupComplete,         Kind::RegistrationRequest,
    Kind::AuthenticationRequest,    Kind::AuthenticationResponse,
    Kind::NAS_SecurityModeCommand,  Kind::NAS_SecurityModeComplete,
    Kind::RRC_SecurityModeCommand,  Kind::RRC_SecurityModeComplete,
    Kind::RegistrationAccept,
};

// Raw spellings emitted by the OpenAirInterface stack. The NAS and RRC
// security mode messages differ only in case.
struct Alias {
    std::string_view raw;
    Kind kind;
};

constexpr std::array<Alias, 4> kAliases = {{
    {"Securitymodecommand", Kind::NAS_SecurityModeCommand},
    {"Securitymodecomplete", Kind::NAS_SecurityModeComplete},
    {"SecurityModeCommand", Kind::RRC_SecurityModeCommand},
    {"SecurityModeComplete", Kind::RRC_SecurityModeComplete},
}};

}  // namespace

std::string_view canonical_name(Kind kind) noexcept {
    switch (kind) {
        case Kind::RRCSetupRequest: return "RRCSetupRequest";
        case Kind::RRCSetup: return "RRCSetup";
        case Kind::RRCSetupComplete: return "RRCSetupComplete";
        case Kind::RegistrationRequest: return "RegistrationRequest";
        case Kind::AuthenticationRequest: return "AuthenticationRequest";
        case Kind::AuthenticationResponse: return "AuthenticationResponse";
        case Kind::NAS_SecurityModeCommand: return "NAS_SecurityModeCommand";
        case Kind::NAS_SecurityModeComplete: return "NAS_SecurityModeComplete";
        case Kind::RRC_SecurityModeCommand: return "RRC_SecurityModeCommand";
        case Kind::RRC_SecurityModeComplete: return "RRC_SecurityModeComplete";
        case Kind::RegistrationAccept: return "RegistrationAccept";
        case Kind::Other: return "";
    }
    return "";
}

std::span<const Kind> canonical_kinds() noexcept { return kKinds; }

MessageType::MessageType(Kind kind) : kind_(kind) {
    if (kind == Kind::Other) {
        throw Error(ErrorKind::MalformedRecord, "MessageType::Other requires text");
    }
}

MessageType MessageType::canonicalize(std::string_view raw) {
    if (raw.empty()) throw Error(ErrorKind::MalformedRecord, "empty message type");
    for (Kind k : kKinds) {
        if (raw == canonical_name(k)) return MessageType(k);
    }
    for (const auto& alias : kAliases) {
        if (raw == alias.raw) return MessageType(alias.kind);
    }
    return MessageType(Kind::Other, std::string(raw));
}

std::string_view MessageType::name() const noexcept {
    return kind_ == Kind::Other ? std::string_view(other_) : canonical_name(kind_);
}

GroundTruth GroundTruth::other_attack(std::string name) {
    if (name.empty()) throw Error(ErrorKind::MalformedRecord, "attack label without a name");
    return GroundTruth(Kind::OtherAttack, std::move(name));
}

GroundTruth GroundTruth::from_text(std::string_view text) {
    if (text == "benign") return benign();
    if (text == "blind_dos") return blind_dos();
    return other_attack(std::string(text));
}

std::string GroundTruth::to_text() const {
    switch (kind_) {
        case Kind::Benign: return "benign";
        case Kind::BlindDos: return "blind_dos";
        case Kind::OtherAttack: return name_;
    }
    return name_;
}

std::vector<RecordView> strip_labels(std::span<const TelemetryRecord> trace) {
    std::vector<RecordView> out;
    out.reserve(trace.size());
    for (const auto& r : trace) out.push_back(strip(r));
    return out;
}

void renumber(Trace& trace) noexcept {
    Seq s = 0;
    for (auto& r : trace) r.seq = s++;
}

}  // namespace l3det
