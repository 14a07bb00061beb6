#include <gtest/gtest.h>

#include "l3det/detector.hpp"
#include "l3det/error.hpp"
#include "l3det/rng.hpp"
#include "support.hpp"

using namespace l3det;
using Kind = MessageType::Kind;
using l3det::test::record;

namespace {

// Direct statement of the rule: setup request with an assigned TMSI that some
// earlier record carried under another RNTI.
bool brute_force_attack(const Trace& t, std::size_t i) {
    const auto& r = t[i];
    if (!r.tmsi.is_assigned()) return false;
    const auto folded = normalize_confusables(r.msg_type.name());
    if (folded != "RRCSetupRequest") return false;
    for (std::size_t j = 0; j < i; ++j) {
        if (t[j].tmsi == r.tmsi && t[j].rnti != r.rnti) return true;
    }
    return false;
}

Trace random_trace(Rng& rng, std::size_t n) {
    Trace t;
    for (std::size_t i = 0; i < n; ++i) {
        const auto kind = uniform_below(rng, 3) == 0 ? Kind::RRCSetupRequest
                                                       : canonical_kinds()[uniform_below(rng, canonical_kinds().size())];
        t.push_back(record(i, "u", kind, static_cast<std::uint16_t>(uniform_below(rng, 6)),
                           static_cast<std::uint32_t>(uniform_below(rng, 6))));
    }
    return t;
}

VerdictClass cls(const DetectionResult& r) {
    return std::get<Verdict>(r).cls;
}

std::vector<DetectionResult> run_oracle(const Trace& t, std::size_t w, OracleContext ctx,
                                        OracleScope scope = OracleScope::NewRecord, bool prev = true) {
    OracleDetector det(ctx, scope);
    std::vector<DetectionResult> out;
    WindowBuilder b{WindowConfig(w), prev};
    for (const auto& r : t) {
        det.observe(strip(r));
        if (auto win = b.push(r)) out.push_back(det.classify(*win));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Response parsing

TEST(ParseResponse, Keywords) {
    EXPECT_EQ(parse_response("Normal").cls, VerdictClass::Normal);
    EXPECT_EQ(parse_response("normal.").cls, VerdictClass::Normal);
    EXPECT_EQ(parse_response("ANOMALOUS").cls, VerdictClass::Anomalous);
    EXPECT_EQ(parse_response("").cls, VerdictClass::Unclassified);
    EXPECT_EQ(parse_response("I cannot tell").cls, VerdictClass::Unclassified);
}

TEST(ParseResponse, WholeWordsOnly) {
    EXPECT_EQ(parse_response("abnormal").cls, VerdictClass::Unclassified);
    EXPECT_EQ(parse_response("normally fine").cls, VerdictClass::Unclassified);
    EXPECT_EQ(parse_response("non_anomalous").cls, VerdictClass::Unclassified);
}

TEST(ParseResponse, EarliestTokenWins) {
    EXPECT_EQ(parse_response("This is Normal, not Anomalous").cls, VerdictClass::Normal);
    EXPECT_EQ(parse_response("Anomalous rather than normal").cls, VerdictClass::Anomalous);
}

TEST(ParseResponse, Explanation) {
    const auto p = parse_response("Anomalous: the TMSI is reused.  ");
    EXPECT_EQ(p.cls, VerdictClass::Anomalous);
    EXPECT_EQ(p.explanation, "the TMSI is reused.");
    EXPECT_FALSE(parse_response("Anomalous.").explanation.has_value());
    EXPECT_FALSE(parse_response("Normal: all good").explanation.has_value());
}

// ---------------------------------------------------------------------------
// detect()

TEST(Detect, RejectsNonZeroTemperature) {
    auto backend = MockBackend::constant("Normal");
    BackendConfig cfg;
    cfg.temperature = 0.7;
    const auto bundle = build_prompt(l3det::test::example_window(), default_blind_dos_description(),
                                     PromptMode::ZeroShot);
    try {
        (void)detect(bundle, backend, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Configuration);
    }
    EXPECT_THROW(LlmDetector(backend, cfg, default_blind_dos_description(), PromptMode::ZeroShot), Error);
}

TEST(Detect, SendsBundleAndKeepsExplanationOnlyWhenEnabled) {
    std::vector<ChatMessage> seen;
    FunctionBackend backend([&](const ChatRequest& r) {
        seen = r.messages;
        EXPECT_EQ(r.temperature, 0.0);
        EXPECT_EQ(r.max_tokens, 64);
        return std::string("Anomalous - spoofed TMSI");
    });
    const auto bundle = build_prompt(l3det::test::example_window(), default_blind_dos_description(),
                                     PromptMode::ZeroShot);
    BackendConfig cfg;
    auto v = detect(bundle, backend, cfg);
    EXPECT_EQ(seen, bundle.messages());
    EXPECT_EQ(v.cls, VerdictClass::Anomalous);
    EXPECT_FALSE(v.explanation.has_value());
    EXPECT_EQ(v.raw, "Anomalous - spoofed TMSI");
    cfg.explanation_enabled = true;
    v = detect(bundle, backend, cfg);
    EXPECT_EQ(v.explanation, "spoofed TMSI");
    EXPECT_GE(v.latency.count(), 0.0);
}

TEST(Detect, BackendFailurePropagatesWithElapsed) {
    FunctionBackend backend([](const ChatRequest&) -> std::string {
        throw BackendError("down", Millis{0});
    });
    const auto bundle = build_prompt(l3det::test::example_window(), default_blind_dos_description(),
                                     PromptMode::ZeroShot);
    EXPECT_THROW((void)detect(bundle, backend, BackendConfig{}), BackendError);
}

TEST(LlmDetector, FailureBecomesDetectionFailure) {
    FunctionBackend backend([](const ChatRequest&) -> std::string {
        throw BackendError("connection refused", Millis{0});
    });
    LlmDetector det(backend, BackendConfig{}, default_blind_dos_description(), PromptMode::GenericCot);
    const auto r = det.classify(l3det::test::example_window());
    ASSERT_TRUE(std::holds_alternative<DetectionFailure>(r));
    EXPECT_NE(std::get<DetectionFailure>(r).message.find("connection refused"), std::string::npos);
}

TEST(LlmDetector, PromptUsesConfiguredMode) {
    auto backend = MockBackend::constant("I am not sure");
    BackendConfig cfg;
    cfg.explanation_enabled = true;
    LlmDetector det(backend, cfg, default_blind_dos_description(), PromptMode::CustomCot, true);
    const auto p = det.prompt_for(l3det::test::example_window());
    EXPECT_EQ(p.messages().back().role, Role::Assistant);
    EXPECT_NE(p.messages()[0].content.find("concise explanation"), std::string::npos);
    EXPECT_EQ(cls(det.classify(l3det::test::example_window())), VerdictClass::Unclassified);
}

// ---------------------------------------------------------------------------
// Confusables

TEST(Confusables, Normalization) {
    const auto mutated = apply_hypoglyphs("RRCSetupRequest", HypoglyphMap::default_map());
    EXPECT_NE(mutated, "RRCSetupRequest");
    EXPECT_EQ(normalize_confusables(mutated), "RRCSetupRequest");
    EXPECT_EQ(normalize_confusables(normalize_confusables(mutated)), "RRCSetupRequest");
    EXPECT_EQ(normalized_type(MessageType::canonicalize(mutated)).kind(), Kind::RRCSetupRequest);
    EXPECT_EQ(normalized_type(MessageType(Kind::RRCSetup)).kind(), Kind::RRCSetup);
}

// ---------------------------------------------------------------------------
// Oracle

TEST(Oracle, MatchesBruteForceOnRandomTraces) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = random_trace(rng, 120);
        if (trial % 2 == 1) {
            std::vector<std::size_t> sel;
            for (std::size_t i = 0; i < t.size(); i += 3) sel.push_back(i);
            t = hypoglyph_mutate(t, sel);
        }
        BlindDosIndex index;
        const auto views = strip_labels(t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            EXPECT_EQ(index.observe(views[i]), brute_force_attack(t, i)) << trial << ":" << i;
        }
        const auto windows = build_windows(t, WindowConfig(1));
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto v = oracle_detect(windows[i], std::span<const RecordView>(views).first(i));
            EXPECT_EQ(v.cls == VerdictClass::Anomalous, brute_force_attack(t, i));
        }
        const auto results = run_oracle(t, 1, OracleContext::FullPrefix);
        for (std::size_t i = 0; i < t.size(); ++i) {
            EXPECT_EQ(cls(results[i]) == VerdictClass::Anomalous, brute_force_attack(t, i));
        }
    }
}

TEST(Oracle, ReferenceTraceIsPerfect) {
    const auto t = l3det::test::reference_trace();
    const auto results = run_oracle(t, 1, OracleContext::FullPrefix);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(cls(results[i]) == VerdictClass::Anomalous, t[i].label.is_attack()) << i;
    }
}

TEST(Oracle, VisibleContextUsesPrevRecord) {
    const auto t = l3det::test::reference_trace();
    const auto with_prev = run_oracle(t, 1, OracleContext::Visible);
    const auto without = run_oracle(t, 1, OracleContext::Visible, OracleScope::NewRecord, false);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(cls(with_prev[i]) == VerdictClass::Anomalous, t[i].label.is_attack());
        EXPECT_EQ(cls(without[i]), VerdictClass::Normal);
    }
}

TEST(Oracle, AnyMemberScopeFlagsEveryWindowHoldingAnAttack) {
    const auto t = l3det::test::reference_trace();
    const auto windows = build_windows(t, WindowConfig(4));
    const auto results = run_oracle(t, 4, OracleContext::FullPrefix, OracleScope::AnyMember);
    ASSERT_EQ(results.size(), windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        EXPECT_EQ(cls(results[i]) == VerdictClass::Anomalous, windows[i].label == WindowLabel::Attacked);
    }
}

TEST(Oracle, UnobservedRecordIsAFailure) {
    OracleDetector det;
    const auto r = det.classify(l3det::test::example_window());
    EXPECT_TRUE(std::holds_alternative<DetectionFailure>(r));
}
