#pragma once

#include "pipesim/trace.hpp"
#include "pipesim/types.hpp"

// Benchmark workload: a burst of N_R requests at t=0, one replenishment per
// completion, lengths drawn uniform-integer from the configured ranges.

namespace pipesim {

struct Request {
    std::int64_t request_id = 0;
    Tokens prompt_len = 0;
    Tokens target_output_len = 0;
    Micros admit_time_us = -1;     // -1 until admitted
    Micros complete_time_us = -1;  // -1 while pending
};

// Deterministic, splittable request source: request k's lengths depend only
// on (seed, k), never on draw order.
class RequestGenerator {
public:
    explicit RequestGenerator(const WorkloadSpec& spec);

    // Lengths for request `index` (0-based).
    Request make(std::int64_t index) const;

    // Next unseen request; each call advances the stream.
    Request next();

    std::int64_t issued() const { return next_index_; }

    // True when a fixed trace file backs the stream and it has run out.
    bool exhausted() const;

private:
    WorkloadSpec spec_;
    std::int64_t next_index_ = 0;
    std::vector<std::pair<Tokens, Tokens>> fixed_;  // from trace_path, if any
};

// One request per line: "prompt_len output_len" (whitespace or comma).
std::vector<std::pair<Tokens, Tokens>> load_request_trace(const std::string& path);

struct WindowStats {
    Tokens input_tokens = 0;   // N_I: prompt tokens of requests admitted in-window
    Tokens output_tokens = 0;  // N_O: tokens generated in-window
    Micros window_us = 0;      // T
};

// Statistics over [start_us, end_us). N_I is admitted-based; see the
// completed-based variant below. Throws SimError on an empty window.
WindowStats windowed_stats(const EventTrace& trace, Micros start_us, Micros end_us);

// Variant counting prompt tokens of requests *completed* in-window.
WindowStats windowed_stats_completed(const EventTrace& trace, Micros start_us, Micros end_us);

}  // namespace pipesim
