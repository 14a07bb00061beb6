#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "l3det/detector.hpp"
#include "l3det/preprocess.hpp"
#include "l3det/sdl.hpp"

namespace l3det {

struct PipelineConfig {
    std::size_t window = 1;
    bool prev_retrieval = true;
    /// Records fetched per poll of the store.
    std::size_t poll_batch = 64;
    /// Concurrent classify() calls; 1 runs inline.
    std::size_t max_in_flight = 1;
};

struct WindowOutcome {
    Seq new_seq = 0;
    WindowLabel label = WindowLabel::Normal;
    DetectionResult result;
};

/// Called with each outcome as soon as it is final, in stream order.
using OutcomeSink = std::function<void(const DetectionWindow&, const WindowOutcome&)>;

/// Polls the store from the start, builds windows as records arrive and
/// classifies each one. Outcomes come back in stream order whatever the
/// concurrency. Throws Error{InsufficientData} if the store holds fewer
/// records than the window size.
std::vector<WindowOutcome> run_pipeline(const TraceStore& store, WindowDetector& detector,
                                        const PipelineConfig& config, const OutcomeSink& sink = {});

using DetectorFactory = std::function<std::unique_ptr<WindowDetector>()>;

}  // namespace l3det
