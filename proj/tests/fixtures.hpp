#pragma once

#include <algorithm>

#include "pipesim/sim.hpp"

// Shared test fixture: a decode-only ring with one layer per stage, fixed
// request lengths that outlive the bench, and zero activation payload so a
// hop costs exactly its link latency.

namespace pipesim::testing {

struct RingFixture {
    ModelSpec model;
    Topology topo;
    PipelinePlan plan;
    WorkloadSpec workload;
};

inline RingFixture decode_ring(int s, std::int64_t nb, std::int64_t b, Micros hop_latency,
                               std::int64_t concurrency = -1) {
    RingFixture f;
    f.model.name = "synthetic";
    f.model.num_layers = s;
    f.model.embedding_bytes = 1;
    f.model.output_layer_bytes = 1;
    f.model.weight_bytes_total = 2 + s;
    f.model.kv_bytes_per_token = 8192 * s;
    f.model.max_seq_len = 1'000'000'000;

    for (int i = 0; i < s; ++i) {
        f.topo.nodes.push_back({"n" + std::to_string(i), 1LL << 40, 32'000'000'000LL,
                                "table1", default_calibration_table()});
    }
    for (int i = 0; i < s && s > 1; ++i) {
        f.topo.links.push_back({"n" + std::to_string(i), "n" + std::to_string((i + 1) % s),
                                hop_latency, 1'000'000'000'000LL});
    }

    const Micros t_s = stage_compute_time(default_calibration_table(), b);
    for (int i = 0; i < s; ++i) {
        StagePlan sp;
        sp.node_id = "n" + std::to_string(i);
        sp.layers = {i, i + 1};
        sp.stage_weight_bytes = 1;
        sp.pcie_bandwidth_bytes_per_s = 32'000'000'000LL;
        sp.budget = memory_budget(f.topo.nodes[i], 1, nb, 0, false);
        sp.batch_size_per_microbatch = b;
        sp.stage_time_us = t_s;
        f.plan.stages.push_back(sp);
    }
    f.plan.n_microbatches = nb;
    f.plan.ring_links = f.topo.links;
    f.plan.stage_time_us = t_s;
    f.plan.offload_enabled = false;
    f.plan.seq_budget_tokens = f.model.max_seq_len;
    f.plan.policy.offload = false;
    f.plan.policy.hidden_bytes_per_token = 0;
    f.plan.policy.calibration_ref_layers = 0;

    f.workload.prompt_len_min = 0;
    f.workload.prompt_len_max = 0;
    f.workload.output_len_min = 900'000'000;
    f.workload.output_len_max = 900'000'000;
    f.workload.concurrency_target = concurrency < 0 ? nb * b : concurrency;
    const Micros period = std::max(nb * t_s, s * t_s + s * hop_latency);
    f.workload.warmup_s = static_cast<std::int64_t>(10 * period / 1'000'000 + 1);
    f.workload.bench_duration_s =
        f.workload.warmup_s + static_cast<std::int64_t>(100 * period / 1'000'000 + 1);
    f.workload.rng_seed = 7;
    return f;
}

}  // namespace pipesim::testing
