#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "l3det/backend.hpp"
#include "l3det/prompting.hpp"
#include "l3det/report.hpp"
#include "l3det/trace_io.hpp"
#include "support.hpp"

using namespace l3det;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = l3det::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        trace_ = (dir_ / "trace.jsonl").string();
        const auto benign = (dir_ / "benign.jsonl").string();
        ASSERT_EQ(invoke({"gen", "--ues", "4", "--sessions", "23", "--records", "996", "--seed", "1", "--out", benign}).code,
                  0);
        ASSERT_EQ(invoke({"inject", "--trace", benign, "--count", "20", "--min-gap", "10", "--seed", "1001", "--out",
                       trace_})
                      .code,
                  0);
    }

    l3det::test::TempDir dir_;
    std::string trace_;
};

}  // namespace

TEST_F(CliTest, GeneratedTraceHasExpectedShape) {
    const auto t = read_trace_file(trace_);
    EXPECT_EQ(t.size(), 1016u);
    EXPECT_EQ(t, l3det::test::reference_trace());
    EXPECT_TRUE(std::filesystem::exists(trace_ + ".manifest.json"));
    const auto manifest = nlohmann::json::parse(read_file(trace_ + ".manifest.json"));
    EXPECT_EQ(manifest.at("command"), "inject");
}

TEST_F(CliTest, GenIsByteIdenticalPerSeed) {
    const auto a = (dir_ / "a.jsonl").string();
    const auto b = (dir_ / "b.jsonl").string();
    ASSERT_EQ(invoke({"gen", "--seed", "5", "--out", a}).code, 0);
    ASSERT_EQ(invoke({"gen", "--seed", "5", "--out", b}).code, 0);
    EXPECT_EQ(read_file(a), read_file(b));
    const auto one = (dir_ / "one.csv").string();
    ASSERT_EQ(invoke({"gen", "--ues", "1", "--sessions", "1", "--out", one}).code, 0);
    EXPECT_EQ(read_trace_file(one).size(), 11u);
}

TEST_F(CliTest, RunOracle) {
    const auto summary = (dir_ / "run.json").string();
    const auto r = invoke({"run", "--trace", trace_, "--w", "1", "--detector", "oracle", "--out", summary});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("windows=1016 attacked=20 w=1"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("counts tp=20 fp=0 tn=996 fn=0"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("f1=1.000"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("latency kind=compute"), std::string::npos);
    EXPECT_EQ(nlohmann::json::parse(read_file(summary)).at("kind"), "run");

    const auto report_dir = (dir_ / "report").string();
    const auto rep = invoke({"report", "--summary", summary, "--out", report_dir});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_TRUE(std::filesystem::exists(dir_ / "report" / "run.csv"));
}

TEST_F(CliTest, RunWithoutPrevIsTheAblation) {
    const auto r = invoke({"run", "--trace", trace_, "--no-prev", "--manifest", (dir_ / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("counts tp=0 fp=0 tn=996 fn=20"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("accuracy=0.980"), std::string::npos);
    EXPECT_NE(r.out.find("fnr=1.000"), std::string::npos);
}

TEST_F(CliTest, RunWithMockBackend) {
    const auto mock = dir_ / "mock.jsonl";
    {
        std::ofstream out(mock);
        out << R"({"hash":"*","response":"Normal"})" << '\n';
    }
    const auto verdicts = (dir_ / "verdicts.jsonl").string();
    const auto r = invoke({"run", "--trace", trace_, "--w", "2", "--detector", "mock:" + mock.string(), "--mode",
                        "generic-cot", "--verdicts", verdicts, "--max-in-flight", "4", "--manifest",
                        (dir_ / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("counts tp=0 fp=0 tn=975 fn=40"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("latency kind=round-trip"), std::string::npos);
    std::ifstream in(verdicts);
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    EXPECT_EQ(lines, 1015u);
}

TEST_F(CliTest, SweepCsvToStdout) {
    const auto dat = (dir_ / "sweep.dat").string();
    const auto r = invoke({"sweep", "--trace", trace_, "--w", "1..10", "--dat", dat, "--manifest", (dir_ / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kSweepCsvHeader);
    for (std::size_t w = 1; w <= 10; ++w) {
        ASSERT_TRUE(std::getline(in, line));
        const auto prefix = std::to_string(w) + "," + std::to_string(1017 - w) + "," + std::to_string(20 * w) + ",";
        EXPECT_EQ(line.rfind(prefix, 0), 0u) << line;
    }
    EXPECT_FALSE(std::getline(in, line));
    EXPECT_TRUE(std::filesystem::exists(dat));
}

TEST_F(CliTest, MutateKeepsOracleVerdicts) {
    const auto mutated = (dir_ / "mutated.jsonl").string();
    const auto m = invoke({"mutate", "--trace", trace_, "--attacks", "2", "--benign", "3", "--seed", "3", "--out", mutated});
    ASSERT_EQ(m.code, 0) << m.err;
    EXPECT_NE(m.out.find("mutated positions"), std::string::npos);
    const auto r = invoke({"run", "--trace", mutated, "--manifest", (dir_ / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("counts tp=20 fp=0 tn=996 fn=0"), std::string::npos) << r.out;
}

TEST(Cli, LintDescriptionFiles) {
    l3det::test::TempDir dir;
    const auto manifest = (dir / "lint.manifest.json").string();
    auto r = invoke({"lint", "--desc", l3det::test::data("direct_description.jsonl").string(), "--manifest", manifest});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("Directly"), std::string::npos);
    r = invoke({"lint", "--desc", l3det::test::data("default_description.jsonl").string(), "--complete", "--manifest", manifest});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("0\tClosely\tP1,P2,P3,P5"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("completed\tDirectly"), std::string::npos) << r.out;
}

TEST(Cli, MalformedTraceReportsKindAndLine) {
    l3det::test::TempDir dir;
    const auto bad = dir / "bad.jsonl";
    {
        std::ofstream out(bad);
        out << R"({"ue":"a","msg":"RRCSetup","rnti":70000,"tmsi":0,"label":"benign"})" << '\n';
    }
    const auto r = invoke({"run", "--trace", bad.string()});
    EXPECT_EQ(r.code, l3det::cli::kExitError);
    EXPECT_EQ(r.err.rfind("error[parse]:", 0), 0u) << r.err;
    EXPECT_NE(r.err.find("rnti"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(invoke({"frobnicate"}).code, l3det::cli::kExitUsage);
    EXPECT_EQ(invoke({"run"}).code, l3det::cli::kExitUsage);
    const auto r = invoke({"run", "--trace", "x.jsonl", "--max-in-flight", "abc"});
    EXPECT_EQ(r.code, l3det::cli::kExitUsage);
    EXPECT_EQ(r.err.rfind("error[usage]:", 0), 0u);
}

TEST_F(CliTest, ConfigurationErrors) {
    auto r = invoke({"run", "--trace", trace_, "--detector", "telepathy"});
    EXPECT_EQ(r.code, l3det::cli::kExitError);
    EXPECT_EQ(r.err.rfind("error[configuration]:", 0), 0u) << r.err;
    r = invoke({"run", "--trace", trace_, "--w", "11"});
    EXPECT_EQ(r.code, l3det::cli::kExitError);
    r = invoke({"run", "--trace", trace_, "--detector", "chat"});
    EXPECT_EQ(r.code, l3det::cli::kExitError);
}

TEST_F(CliTest, StudyWithOracle) {
    const auto descs = dir_ / "descs.jsonl";
    {
        std::ofstream out(descs);
        out << read_file(l3det::test::data("default_description.jsonl")) << read_file(l3det::test::data("direct_description.jsonl"));
    }
    const auto summary = (dir_ / "study.json").string();
    const auto r = invoke({"study", "--trace", trace_, "--desc", descs.string(), "--resamples", "100", "--out", summary});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("group Directly n=1"), std::string::npos) << r.out;
    const auto rep = invoke({"report", "--summary", summary, "--out", (dir_ / "rep").string()});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_TRUE(std::filesystem::exists(dir_ / "rep" / "groups.csv"));
}

TEST(Cli, ExtractWithMock) {
    l3det::test::TempDir dir;
    const auto src = dir / "src.txt";
    const auto mock = dir / "mock.jsonl";
    {
        std::ofstream(src) << "Blind DoS attack material.";
        std::ofstream(mock) << R"({"hash":"*","response":"An attacker spoofs the victim TMSI in an RRCSetupRequest."})"
                            << '\n';
    }
    const auto out = (dir / "descs.jsonl").string();
    const auto r = invoke({"extract", "--source", src.string(), "--samples", "3", "--detector", "mock:" + mock.string(),
                        "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto descs = read_descriptions(out);
    ASSERT_EQ(descs.size(), 3u);
    EXPECT_EQ(descs[0].group, AlignmentGroup::Directly);
}
