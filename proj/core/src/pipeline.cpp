#include "l3det/pipeline.hpp"

#include <deque>
#include <future>

#include "l3det/error.hpp"

namespace l3det {

namespace {

struct Pending {
    DetectionWindow window;
    std::future<DetectionResult> result;
};

}  // namespace

std::vector<WindowOutcome> run_pipeline(const TraceStore& store, WindowDetector& detector,
                                        const PipelineConfig& config, const OutcomeSink& sink) {
    const WindowConfig wc(config.window);
    if (config.poll_batch == 0) throw Error(ErrorKind::Configuration, "poll batch must be positive");
    if (store.size() < wc.size()) {
        throw Error(ErrorKind::InsufficientData, "store has " + std::to_string(store.size()) +
                                                     " records, window needs " + std::to_string(wc.size()));
    }
    const std::size_t in_flight =
        detector.supports_concurrency() ? std::max<std::size_t>(config.max_in_flight, 1) : 1;

    WindowBuilder builder(wc, config.prev_retrieval);
    std::vector<WindowOutcome> outcomes;
    std::deque<Pending> pending;

    auto finish_front = [&] {
        auto& p = pending.front();
        WindowOutcome o{p.window.new_record().seq, p.window.label, p.result.get()};
        if (sink) sink(p.window, o);
        outcomes.push_back(std::move(o));
        pending.pop_front();
    };

    auto classify = [&](DetectionWindow window) {
        if (in_flight == 1) {
            WindowOutcome o{window.new_record().seq, window.label, detector.classify(window)};
            if (sink) sink(window, o);
            outcomes.push_back(std::move(o));
            return;
        }
        while (pending.size() >= in_flight) finish_front();
        pending.push_back(Pending{std::move(window), {}});
        const DetectionWindow* w = &pending.back().window;
        pending.back().result = std::async(std::launch::async, [&detector, w] { return detector.classify(*w); });
    };

    PollCursor cursor;
    for (;;) {
        auto batch = store.poll(cursor, config.poll_batch);
        if (batch.records.empty()) break;
        cursor = batch.cursor;
        for (const auto& record : batch.records) {
            detector.observe(strip(record));
            if (auto window = builder.push(record)) classify(std::move(*window));
        }
    }
    while (!pending.empty()) finish_front();
    return outcomes;
}

}  // namespace l3det
