#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "l3det/model.hpp"

namespace l3det {

struct FormattedRecord {
    std::string text;
    bool is_new = false;

    friend bool operator==(const FormattedRecord&, const FormattedRecord&) = default;
};

inline constexpr std::string_view kNewMessageMarker = " (New message)";

/// "<Type> with RNTI <rnti>, and TMSI <tmsi>", plus " (New message)" when
/// is_new. Other types are rendered byte-for-byte.
FormattedRecord format_record(const RecordView& record, bool is_new);

/// Window size, 1 through 10.
class WindowConfig {
public:
    static constexpr std::size_t kMin = 1;
    static constexpr std::size_t kMax = 10;

    /// Throws Error{Configuration} outside [1, 10].
    explicit WindowConfig(std::size_t size);

    std::size_t size() const noexcept { return size_; }

private:
    std::size_t size_;
};

enum class WindowLabel { Normal, Attacked };

/// Attacked iff any member carries an attack label.
WindowLabel label_window(std::span<const GroundTruth> members);

struct DetectionWindow {
    /// Members oldest first; the last one is the new record.
    std::vector<RecordView> members;
    /// Most recent record before the new one, anywhere in the trace, that
    /// shares its assigned TMSI.
    std::optional<RecordView> prev_same_tmsi;
    /// Ground truth for evaluation. Never rendered into prompts.
    WindowLabel label = WindowLabel::Normal;

    const RecordView& new_record() const { return members.back(); }
    std::span<const RecordView> history() const {
        return std::span<const RecordView>(members).first(members.size() - 1);
    }

    /// history formatted as old context, then the new record marked.
    std::vector<FormattedRecord> formatted() const;
    std::optional<FormattedRecord> formatted_prev(bool mark_new = false) const;
};

/// Highest-seq record in `history` with the given TMSI; none for the sentinel.
std::optional<RecordView> previous_with_tmsi(std::span<const RecordView> history, Tmsi tmsi);

/// Streaming window construction. Feed records in trace order; every push
/// from the w-th record on yields the window ending at that record.
class WindowBuilder {
public:
    explicit WindowBuilder(WindowConfig config, bool prev_retrieval = true);

    std::optional<DetectionWindow> push(const TelemetryRecord& record);

    std::size_t records_seen() const noexcept { return seen_; }
    const WindowConfig& config() const noexcept { return config_; }

private:
    struct Slot {
        RecordView view;
        GroundTruth label = GroundTruth::benign();
    };

    WindowConfig config_;
    bool prev_retrieval_;
    std::size_t seen_ = 0;
    std::deque<Slot> ring_;
    std::unordered_map<std::uint32_t, RecordView> last_by_tmsi_;
};

/// All N - w + 1 windows of a trace. Throws Error{InsufficientData} if N < w.
std::vector<DetectionWindow> build_windows(const Trace& trace, WindowConfig config,
                                           bool prev_retrieval = true);

}  // namespace l3det
