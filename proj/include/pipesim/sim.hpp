#pragma once

#include "pipesim/planner.hpp"
#include "pipesim/trace.hpp"
#include "pipesim/types.hpp"
#include "pipesim/workload.hpp"

// Deterministic discrete-event execution of a PipelinePlan: stage compute,
// inter-stage transfers with latency and bandwidth, and double-buffered KV
// swap-in/out overlapped with compute.

namespace pipesim {

struct StageMetrics {
    Micros busy_us = 0;
    Micros stall_us = 0;   // compute delayed by a pending swap-in
    Micros bubble_us = 0;  // remaining idle time (network latency, fill/drain)
    double busy_fraction = 0;
    double transfer_wait_fraction = 0;
    double bubble_fraction = 0;
};

struct SimReport {
    Micros window_start_us = 0;
    Micros window_end_us = 0;
    Tokens input_tokens = 0;   // N_I
    Tokens output_tokens = 0;  // N_O
    double wall_time_s = 0;    // T
    double input_throughput = 0;   // M_I = N_I / T
    double output_throughput = 0;  // M_O = N_O / T
    double total_throughput = 0;   // M = M_I + M_O
    std::vector<StageMetrics> stages;
    double mean_bubble_fraction = 0;
    double max_bubble_fraction = 0;
    Micros swap_stall_us = 0;  // summed over stages
    std::int64_t completed_requests = 0;
    std::int64_t live_requests = 0;  // admitted but not completed at end of sim
    std::int64_t admitted_requests = 0;
    std::uint64_t rng_seed = 0;
};

struct SimResult {
    SimReport report;
    EventTrace trace;
};

// Executes until bench_duration_s of simulated time; the report covers
// [warmup_s, bench_duration_s). Identical inputs produce bit-identical
// traces. Throws SimError on plan/topology mismatch or engine deadlock.
SimResult run(const PipelinePlan& plan, const Topology& topo, const WorkloadSpec& workload,
              const ModelSpec& model);

// Closed-form decode-only throughput: N_B * B / max(N_B * T_S, S * T_S + sum
// of hop latencies) tokens per second. Analytic oracle for run().
double steady_state_throughput(const PipelinePlan& plan);

// Re-validates a trace against resource invariants: one active compute per
// stage, swap ordering/bandwidth, transfer causality, compute-requires-
// resident. Empty result on a clean trace.
std::vector<Violation> replay_check(const EventTrace& trace, const PipelinePlan& plan);

}  // namespace pipesim
