#pragma once

#include "pipesim/config.hpp"
#include "pipesim/economics.hpp"
#include "pipesim/sim.hpp"

// Latency sweep: inject each hop latency uniformly, run every policy variant,
// and assemble the policy x latency throughput matrix.

namespace pipesim {

// The three policy rows of the sweep matrix.
//   baseline : no offload, N_B fixed at the stage count
//   offload  : offload on, N_B fixed at the stage count
//   opt      : offload on, N_B derived from latency
enum class Policy { Baseline, Offload, Opt };

const char* policy_name(Policy p);
Policy policy_from_name(const std::string& name);

// Applies a policy row to the configured scheduler knobs.
SchedulerPolicy apply_policy(const SchedulerPolicy& base, Policy p, std::int64_t n_stages);

// Returns a copy of the topology with every link latency set to `latency_us`.
Topology with_uniform_latency(const Topology& topo, Micros latency_us);

struct SweepCell {
    Policy policy = Policy::Baseline;
    Micros latency_us = 0;
    bool failed = false;
    std::string error;
    PipelinePlan plan;
    SimReport report;
    EventTrace trace;

    std::string name() const;  // e.g. "opt.l64000"
};

struct SweepResult {
    std::vector<Micros> latencies_us;
    std::vector<Policy> policies;
    std::vector<SweepCell> cells;  // row-major: policies x latencies

    const SweepCell& at(Policy p, Micros latency_us) const;
    std::string to_csv() const;    // matrix, "failed" for failed cells
    std::string to_table() const;  // human form; same numbers as the csv
};

// Runs the sweep. `parallel` > 1 executes cells on worker threads; assembly
// order is by cell index either way. keep_traces=false drops event traces
// after each cell's replay data has been recorded (memory saver).
SweepResult run_sweep(const RunConfig& config, const std::vector<Policy>& policies,
                      int parallel = 1, bool keep_traces = true);

// Flat key=value report document; economics appended when pricing is present.
std::string report_to_kv(const SimReport& report, const PipelinePlan& plan, Micros latency_us,
                         const std::string& policy, const ProfitAnalysis* profit);

}  // namespace pipesim
