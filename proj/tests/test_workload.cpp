#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "pipesim/workload.hpp"

using namespace pipesim;

namespace {
WorkloadSpec uniform_spec(Tokens pmin, Tokens pmax, Tokens omin, Tokens omax,
                          std::uint64_t seed) {
    WorkloadSpec w;
    w.prompt_len_min = pmin;
    w.prompt_len_max = pmax;
    w.output_len_min = omin;
    w.output_len_max = omax;
    w.concurrency_target = 8;
    w.bench_duration_s = 10;
    w.warmup_s = 1;
    w.rng_seed = seed;
    return w;
}
}  // namespace

TEST_CASE("generated prompt lengths average 256 over [0,512]") {
    RequestGenerator gen(uniform_spec(0, 512, 0, 512, 12345));
    double sum_p = 0, sum_o = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const Request r = gen.next();
        CHECK(r.prompt_len >= 0);
        CHECK(r.prompt_len <= 512);
        CHECK(r.target_output_len >= 0);
        CHECK(r.target_output_len <= 512);
        sum_p += static_cast<double>(r.prompt_len);
        sum_o += static_cast<double>(r.target_output_len);
    }
    CHECK(sum_p / n > 251.0);
    CHECK(sum_p / n < 261.0);
    CHECK(sum_o / n > 251.0);
    CHECK(sum_o / n < 261.0);
}

TEST_CASE("degenerate ranges give constant lengths") {
    RequestGenerator gen(uniform_spec(7, 7, 3, 3, 9));
    for (int i = 0; i < 100; ++i) {
        const Request r = gen.next();
        CHECK(r.prompt_len == 7);
        CHECK(r.target_output_len == 3);
    }
}

TEST_CASE("same seed gives identical streams; draws are splittable") {
    const WorkloadSpec spec = uniform_spec(0, 512, 0, 512, 777);
    RequestGenerator a(spec), b(spec);
    for (int i = 0; i < 1000; ++i) {
        const Request ra = a.next();
        const Request rb = b.next();
        CHECK(ra.prompt_len == rb.prompt_len);
        CHECK(ra.target_output_len == rb.target_output_len);
    }
    // index-addressable regardless of order
    RequestGenerator c(spec);
    CHECK(c.make(500).prompt_len == a.make(500).prompt_len);
    CHECK(c.make(2).prompt_len == a.make(2).prompt_len);
}

TEST_CASE("different seeds differ") {
    RequestGenerator a(uniform_spec(0, 512, 0, 512, 1));
    RequestGenerator b(uniform_spec(0, 512, 0, 512, 2));
    int same = 0;
    for (int i = 0; i < 200; ++i) {
        if (a.next().prompt_len == b.next().prompt_len) same++;
    }
    CHECK(same < 50);
}

TEST_CASE("request trace file overrides the generator") {
    const std::string path = "req_trace_test.txt";
    {
        std::ofstream f(path);
        f << "# prompt output\n100 50\n200,75\n0 0\n";
    }
    WorkloadSpec spec = uniform_spec(0, 512, 0, 512, 1);
    spec.trace_path = path;
    RequestGenerator gen(spec);
    CHECK(gen.next().prompt_len == 100);
    const Request second = gen.next();
    CHECK(second.prompt_len == 200);
    CHECK(second.target_output_len == 75);
    CHECK(!gen.exhausted());
    CHECK(gen.next().prompt_len == 0);
    CHECK(gen.exhausted());
    std::remove(path.c_str());
}

TEST_CASE("windowed_stats counts admits and circuit-end tokens") {
    EventTrace trace;
    auto add = [&](Micros t, EventKind k, std::int64_t a, std::int64_t b, std::int64_t c) {
        trace.push_back({t, static_cast<std::int64_t>(trace.size()), k, 0, 0, a, b, c});
    };
    add(0, EventKind::RequestAdmit, 0, 100, 200);       // before window
    add(1500, EventKind::RequestAdmit, 1, 40, 10);      // in window
    add(1000, EventKind::ComputeEnd, 8, 8, 1);          // circuit end, 8 tokens
    add(1999, EventKind::ComputeEnd, 8, 5, 1);          // 5 tokens
    add(1999, EventKind::ComputeEnd, 8, 7, 0);          // mid-pipeline, ignored
    add(2000, EventKind::ComputeEnd, 8, 9, 1);          // at end, excluded
    add(2100, EventKind::RequestComplete, 0, 123, 0);   // after window

    const WindowStats w = windowed_stats(trace, 1000, 2000);
    CHECK(w.input_tokens == 40);
    CHECK(w.output_tokens == 13);
    CHECK(w.window_us == 1000);

    const WindowStats full = windowed_stats(trace, 0, 3000);
    CHECK(full.input_tokens == 140);
    CHECK(full.output_tokens == 22);

    // completed-based variant counts request 0's prompt at completion time
    const WindowStats comp = windowed_stats_completed(trace, 2000, 3000);
    CHECK(comp.input_tokens == 100);

    CHECK_THROWS_AS(windowed_stats(trace, 2000, 2000), SimError);

    const WindowStats none = windowed_stats(trace, 900000, 901000);
    CHECK(none.input_tokens == 0);
    CHECK(none.output_tokens == 0);
    CHECK(none.window_us == 1000);
}
