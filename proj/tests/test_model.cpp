#include <gtest/gtest.h>

#include <set>

#include "l3det/error.hpp"
#include "l3det/model.hpp"

using namespace l3det;

TEST(MessageType, NasSecurityModeAliases) {
    EXPECT_EQ(canonicalize_message_type("Securitymodecommand"), MessageType(MessageType::Kind::NAS_SecurityModeCommand));
    EXPECT_EQ(canonicalize_message_type("Securitymodecomplete"),
              MessageType(MessageType::Kind::NAS_SecurityModeComplete));
}

TEST(MessageType, RrcSecurityModeAliases) {
    EXPECT_EQ(canonicalize_message_type("SecurityModeCommand"), MessageType(MessageType::Kind::RRC_SecurityModeCommand));
    EXPECT_EQ(canonicalize_message_type("SecurityModeComplete"),
              MessageType(MessageType::Kind::RRC_SecurityModeComplete));
}

TEST(MessageType, CanonicalNamesMapToThemselves) {
    for (auto kind : canonical_kinds()) {
        const auto t = canonicalize_message_type(canonical_name(kind));
        EXPECT_EQ(t.kind(), kind);
        EXPECT_EQ(t.name(), canonical_name(kind));
    }
}

TEST(MessageType, CanonicalNamesAreUnique) {
    std::set<std::string> names;
    for (auto kind : canonical_kinds()) names.emplace(canonical_name(kind));
    EXPECT_EQ(names.size(), canonical_kinds().size());
    EXPECT_EQ(canonical_kinds().size(), 11u);
}

TEST(MessageType, CanonicalizationIsIdempotent) {
    for (const char* raw : {"Securitymodecommand", "SecurityModeComplete", "RRCSetupRequest", "PDUSessionRequest",
                            "NAS_SecurityModeComplete", "rrcsetuprequest"}) {
        const auto once = canonicalize_message_type(raw);
        EXPECT_EQ(canonicalize_message_type(once.name()), once) << raw;
    }
}

TEST(MessageType, UnknownNamesBecomeOther) {
    const auto t = canonicalize_message_type("PDUSessionEstablishmentRequest");
    EXPECT_TRUE(t.is_other());
    EXPECT_EQ(t.name(), "PDUSessionEstablishmentRequest");
}

TEST(MessageType, OtherNeverCarriesACanonicalName) {
    for (auto kind : canonical_kinds()) {
        EXPECT_FALSE(canonicalize_message_type(canonical_name(kind)).is_other());
    }
}

TEST(MessageType, EmptyIsMalformed) {
    try {
        (void)canonicalize_message_type("");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MalformedRecord);
    }
}

TEST(MessageType, OtherKindNeedsText) {
    EXPECT_THROW(MessageType(MessageType::Kind::Other), Error);
}

TEST(Identifiers, TmsiSentinel) {
    EXPECT_FALSE(kUnassignedTmsi.is_assigned());
    EXPECT_TRUE(Tmsi{1}.is_assigned());
    EXPECT_TRUE(Tmsi{0xFFFFFFFFu}.is_assigned());
}

TEST(GroundTruth, TextRoundTrip) {
    for (const auto& g : {GroundTruth::benign(), GroundTruth::blind_dos(), GroundTruth::other_attack("downlink_dos")}) {
        EXPECT_EQ(GroundTruth::from_text(g.to_text()), g);
    }
    EXPECT_FALSE(GroundTruth::benign().is_attack());
    EXPECT_TRUE(GroundTruth::blind_dos().is_attack());
    EXPECT_TRUE(GroundTruth::other_attack("x").is_attack());
}

TEST(GroundTruth, OtherAttackNeedsName) {
    EXPECT_THROW(GroundTruth::other_attack(""), Error);
}

TEST(RecordView, StripDropsUeAndLabel) {
    TelemetryRecord r{7, "ue3", MessageType::Kind::RRCSetup, Rnti{9}, Tmsi{11}, GroundTruth::blind_dos()};
    const auto v = strip(r);
    EXPECT_EQ(v.seq, 7u);
    EXPECT_EQ(v.msg_type, MessageType(MessageType::Kind::RRCSetup));
    EXPECT_EQ(v.rnti.value, 9);
    EXPECT_EQ(v.tmsi.value, 11u);
}

TEST(Trace, Renumber) {
    Trace t(3);
    t[0].seq = 40;
    t[1].seq = 2;
    t[2].seq = 9;
    renumber(t);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].seq, i);
}
