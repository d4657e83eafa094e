#pragma once

#include <utility>

#include "pipesim/perf_model.hpp"
#include "pipesim/types.hpp"

// Plan construction: node selection/ordering, contiguous layer partitioning,
// Eq. 1/2 pool sizing, and the microbatch count that fills latency bubbles.

namespace pipesim {

struct SchedulerPolicy {
    bool offload = true;
    std::int64_t nb_override = 0;              // 0 = derive from latency
    std::int64_t prefill_chunk = 256;
    Bytes hidden_bytes_per_token = 16384;      // inter-stage activation payload
    std::int64_t kv_reserve_permille = 300;    // partitioner KV reservation
    std::int64_t calibration_ref_layers = 0;   // 0 = table time used unscaled
    std::string ring_order = "config";         // "config" | "nearest"
    std::int64_t pool_scale_milli = 1000;      // scales Eq. 2's M_G (tests)
    std::string pool_time_basis = "compute";   // "compute" | "slot"
};

struct LayerRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;  // half-open

    std::int64_t size() const { return end - begin; }
    bool operator==(const LayerRange&) const = default;
};

struct StagePlan {
    std::string node_id;
    LayerRange layers;
    Bytes stage_weight_bytes = 0;
    Bytes pcie_bandwidth_bytes_per_s = 0;
    MemoryBudget budget;
    std::int64_t batch_size_per_microbatch = 0;
    Micros stage_time_us = 0;  // this stage's compute time at the plan batch
};

struct PipelinePlan {
    std::vector<StagePlan> stages;
    std::int64_t n_microbatches = 0;       // N_B
    std::vector<LinkSpec> ring_links;      // stage i -> i+1, last -> first; empty when S == 1
    Micros stage_time_us = 0;              // T_S: max over stages, the pipeline clock
    bool offload_enabled = false;
    bool converged = true;                 // false: fixed point did not settle, last iterate kept
    std::int64_t iterations = 0;
    Tokens seq_budget_tokens = 0;          // per-request admission budget
    SchedulerPolicy policy;

    std::int64_t n_stages() const { return static_cast<std::int64_t>(stages.size()); }
    std::int64_t batch_size() const {
        return stages.empty() ? 0 : stages.front().batch_size_per_microbatch;
    }
    Micros total_hop_latency_us() const;

    std::string to_json() const;
    static PipelinePlan from_json(const std::string& text);
    std::string summary() const;
};

// Contiguous layer ranges proportional to each node's memory after reserving
// kv_reserve_permille/1000 of it for KV cache. Every range is non-empty.
std::vector<LayerRange> partition_layers(const ModelSpec& model, const Topology& topo,
                                         const std::vector<std::string>& node_order,
                                         std::int64_t kv_reserve_permille);

// Smallest N_B such that a ring of S stages with per-hop latency L has no
// steady-state idle time: ceil(S * (T_S + L) / T_S).
std::int64_t min_bubble_free_microbatches(std::int64_t n_stages, Micros stage_time_us,
                                          Micros hop_latency_us);

// Heterogeneous-hop variant; only the latency sum matters for saturation.
std::int64_t min_bubble_free_microbatches_total(std::int64_t n_stages, Micros stage_time_us,
                                                Micros total_hop_latency_us);

// Ring node ordering: config order, or a nearest-neighbor tour by latency.
std::vector<std::string> ring_node_order(const Topology& topo, const std::string& mode);

// Fixed-point plan construction. Throws PlanError when the topology is
// invalid, memory is infeasible, or a ring link is missing. A plan that fails
// to converge within 32 iterations is returned with converged = false.
PipelinePlan plan(const ModelSpec& model, const Topology& topo, const WorkloadSpec& workload,
                  const SchedulerPolicy& policy);

}  // namespace pipesim
