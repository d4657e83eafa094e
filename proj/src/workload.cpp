#include "pipesim/workload.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace pipesim {

namespace {

// SplitMix64; the per-request state depends only on (seed, index).
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

Tokens draw_uniform(SplitMix64& rng, Tokens lo, Tokens hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Modulo bias is ~span/2^64; determinism matters more here.
    return lo + static_cast<Tokens>(rng.next() % span);
}

}  // namespace

RequestGenerator::RequestGenerator(const WorkloadSpec& spec) : spec_(spec) {
    if (!spec.trace_path.empty()) {
        fixed_ = load_request_trace(spec.trace_path);
    }
}

Request RequestGenerator::make(std::int64_t index) const {
    Request r;
    r.request_id = index;
    if (!fixed_.empty()) {
        if (index < static_cast<std::int64_t>(fixed_.size())) {
            r.prompt_len = fixed_[index].first;
            r.target_output_len = fixed_[index].second;
        } else {
            r.prompt_len = -1;  // exhausted
            r.target_output_len = -1;
        }
        return r;
    }
    SplitMix64 rng{spec_.rng_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1)};
    r.prompt_len = draw_uniform(rng, spec_.prompt_len_min, spec_.prompt_len_max);
    r.target_output_len = draw_uniform(rng, spec_.output_len_min, spec_.output_len_max);
    return r;
}

Request RequestGenerator::next() {
    return make(next_index_++);
}

bool RequestGenerator::exhausted() const {
    return !fixed_.empty() && next_index_ >= static_cast<std::int64_t>(fixed_.size());
}

std::vector<std::pair<Tokens, Tokens>> load_request_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open request trace " + path);
    std::vector<std::pair<Tokens, Tokens>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (char& ch : line) {
            if (ch == ',') ch = ' ';
        }
        std::istringstream ls(line);
        Tokens p, o;
        if (!(ls >> p >> o)) throw ConfigError(path + ": bad request line '" + line + "'");
        if (p < 0 || o < 0) throw ConfigError(path + ": negative length in '" + line + "'");
        out.emplace_back(p, o);
    }
    return out;
}

static WindowStats windowed_stats_impl(const EventTrace& trace, Micros start_us, Micros end_us,
                                       bool completed_based) {
    if (end_us <= start_us) throw SimError("windowed_stats: empty window");
    WindowStats w;
    w.window_us = end_us - start_us;
    std::map<std::int64_t, Tokens> prompt_of;  // only needed for completed-based N_I
    for (const Event& e : trace) {
        const bool in_window = e.time_us >= start_us && e.time_us < end_us;
        switch (e.kind) {
            case EventKind::RequestAdmit:
                if (completed_based) prompt_of[e.a] = e.b;
                if (!completed_based && in_window) w.input_tokens += e.b;
                break;
            case EventKind::RequestComplete:
                if (completed_based && in_window) w.input_tokens += prompt_of[e.a];
                break;
            case EventKind::ComputeEnd:
                // One generated token per decoding request at each circuit end
                // (last-stage compute end, marked by c == 1).
                if (e.c == 1 && in_window) w.output_tokens += e.b;
                break;
            default:
                break;
        }
    }
    return w;
}

WindowStats windowed_stats(const EventTrace& trace, Micros start_us, Micros end_us) {
    return windowed_stats_impl(trace, start_us, end_us, false);
}

WindowStats windowed_stats_completed(const EventTrace& trace, Micros start_us, Micros end_us) {
    return windowed_stats_impl(trace, start_us, end_us, true);
}

}  // namespace pipesim
