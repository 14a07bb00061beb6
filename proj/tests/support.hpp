#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "l3det/model.hpp"
#include "l3det/preprocess.hpp"
#include "l3det/sdl.hpp"
#include "l3det/trace_io.hpp"

namespace l3det::test {

inline std::filesystem::path source_dir() {
    return L3DET_TEST_SOURCE_DIR;
}

inline std::filesystem::path golden(const std::string& name) {
    return source_dir() / "golden" / name;
}

inline std::filesystem::path fixture(const std::string& name) {
    return source_dir() / "fixtures" / name;
}

inline std::filesystem::path data(const std::string& name) {
    return source_dir() / "data" / name;
}

/// 996 benign records plus 20 spaced Blind DoS injections.
inline Trace reference_trace(std::uint64_t seed = 1) {
    BenignTraceConfig benign;
    benign.ues = 4;
    benign.sessions_per_ue = 23;
    benign.max_records = 996;
    benign.seed = seed;
    InjectionConfig inject;
    inject.count = 20;
    inject.min_gap = 10;
    inject.seed = seed + 1000;
    return inject_blind_dos(generate_benign_trace(benign), inject);
}

inline TelemetryRecord record(Seq seq, std::string ue, MessageType type, std::uint16_t rnti, std::uint32_t tmsi,
                              GroundTruth label = GroundTruth::benign()) {
    return TelemetryRecord{seq, std::move(ue), std::move(type), Rnti{rnti}, Tmsi{tmsi}, std::move(label)};
}

/// The worked example used by the golden transcripts: a new RRCSetup
/// whose previous message is the RRCSetupRequest with the same values. The
/// sentinel TMSI is never retrieved as prev, so the window is built by hand.
inline DetectionWindow example_window() {
    DetectionWindow w;
    w.members.push_back(RecordView{1, MessageType::Kind::RRCSetup, Rnti{26168}, Tmsi{0}});
    w.prev_same_tmsi = RecordView{0, MessageType::Kind::RRCSetupRequest, Rnti{26168}, Tmsi{0}};
    return w;
}

inline std::string rstrip(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("l3det-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace l3det::test
