#include "l3det/preprocess.hpp"

#include <algorithm>

#include "l3det/error.hpp"

namespace l3det {

FormattedRecord format_record(const RecordView& record, bool is_new) {
    std::string text;
    text.reserve(64);
    text += record.msg_type.name();
    text += " with RNTI ";
    text += std::to_string(record.rnti.value);
    text += ", and TMSI ";
    text += std::to_string(record.tmsi.value);
    if (is_new) text += kNewMessageMarker;
    return FormattedRecord{std::move(text), is_new};
}

WindowConfig::WindowConfig(std::size_t size) : size_(size) {
    if (size < kMin || size > kMax) {
        throw Error(ErrorKind::Configuration,
                    "window size " + std::to_string(size) + " outside [1, 10]");
    }
}

WindowLabel label_window(std::span<const GroundTruth> members) {
    const bool attacked =
        std::any_of(members.begin(), members.end(), [](const GroundTruth& g) { return g.is_attack(); });
    return attacked ? WindowLabel::Attacked : WindowLabel::Normal;
}

std::vector<FormattedRecord> DetectionWindow::formatted() const {
    std::vector<FormattedRecord> out;
    out.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        out.push_back(format_record(members[i], i + 1 == members.size()));
    }
    return out;
}

std::optional<FormattedRecord> DetectionWindow::formatted_prev(bool mark_new) const {
    if (!prev_same_tmsi) return std::nullopt;
    return format_record(*prev_same_tmsi, mark_new);
}

std::optional<RecordView> previous_with_tmsi(std::span<const RecordView> history, Tmsi tmsi) {
    if (!tmsi.is_assigned()) return std::nullopt;
    const RecordView* best = nullptr;
    for (const auto& r : history) {
        if (r.tmsi == tmsi && (best == nullptr || r.seq > best->seq)) best = &r;
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

WindowBuilder::WindowBuilder(WindowConfig config, bool prev_retrieval)
    : config_(config), prev_retrieval_(prev_retrieval) {}

std::optional<DetectionWindow> WindowBuilder::push(const TelemetryRecord& record) {
    const RecordView view = strip(record);

    std::optional<RecordView> prev;
    if (prev_retrieval_ && view.tmsi.is_assigned()) {
        if (const auto it = last_by_tmsi_.find(view.tmsi.value); it != last_by_tmsi_.end()) {
            prev = it->second;
        }
    }
    if (view.tmsi.is_assigned()) last_by_tmsi_.insert_or_assign(view.tmsi.value, view);

    ring_.push_back(Slot{view, record.label});
    if (ring_.size() > config_.size()) ring_.pop_front();
    ++seen_;
    if (ring_.size() < config_.size()) return std::nullopt;

    DetectionWindow window;
    window.members.reserve(ring_.size());
    std::vector<GroundTruth> labels;
    labels.reserve(ring_.size());
    for (const auto& slot : ring_) {
        window.members.push_back(slot.view);
        labels.push_back(slot.label);
    }
    window.prev_same_tmsi = std::move(prev);
    window.label = label_window(labels);
    return window;
}

std::vector<DetectionWindow> build_windows(const Trace& trace, WindowConfig config, bool prev_retrieval) {
    if (trace.size() < config.size()) {
        throw Error(ErrorKind::InsufficientData,
                    "trace has " + std::to_string(trace.size()) + " records, window needs " +
                        std::to_string(config.size()));
    }
    WindowBuilder builder(config, prev_retrieval);
    std::vector<DetectionWindow> out;
    out.reserve(trace.size() - config.size() + 1);
    for (const auto& r : trace) {
        if (auto w = builder.push(r)) out.push_back(std::move(*w));
    }
    return out;
}

}  // namespace l3det
