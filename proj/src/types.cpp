#include "pipesim/types.hpp"

#include <algorithm>
#include <set>

namespace pipesim {

const NodeSpec* Topology::find_node(const std::string& id) const {
    for (const auto& n : nodes) {
        if (n.node_id == id) return &n;
    }
    return nullptr;
}

const LinkSpec* Topology::find_link(const std::string& src, const std::string& dst) const {
    for (const auto& l : links) {
        if (l.src == src && l.dst == dst) return &l;
    }
    return nullptr;
}

static void sort_violations(std::vector<Violation>& v) {
    std::sort(v.begin(), v.end(), [](const Violation& a, const Violation& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.entity != b.entity) return a.entity < b.entity;
        return a.message < b.message;
    });
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<Violation> validate_topology(const Topology& topo) {
    std::vector<Violation> out;
    std::set<std::string> ids;
    for (const auto& n : topo.nodes) {
        if (!ids.insert(n.node_id).second) {
            out.push_back({"duplicate-node-id", n.node_id,
                           "node_id '" + n.node_id + "' appears more than once"});
        }
        if (n.gpu_mem_bytes <= 0) {
            out.push_back({"nonpositive-gpu-mem", n.node_id,
                           "gpu_mem_bytes must be > 0"});
        }
        if (n.pcie_bandwidth_bytes_per_s <= 0) {
            out.push_back({"nonpositive-pcie-bandwidth", n.node_id,
                           "pcie_bandwidth_bytes_per_s must be > 0"});
        }
    }
    for (const auto& l : topo.links) {
        const std::string ent = l.src + "->" + l.dst;
        if (l.src == l.dst) {
            out.push_back({"self-loop", ent, "link src and dst must differ"});
        }
        if (!ids.count(l.src)) {
            out.push_back({"unknown-endpoint", ent, "link src '" + l.src + "' is not a node"});
        }
        if (!ids.count(l.dst)) {
            out.push_back({"unknown-endpoint", ent, "link dst '" + l.dst + "' is not a node"});
        }
        if (l.latency_us < 0) {
            out.push_back({"negative-latency", ent, "latency_us must be >= 0"});
        }
        if (l.bandwidth_bytes_per_s <= 0) {
            out.push_back({"nonpositive-bandwidth", ent, "bandwidth_bytes_per_s must be > 0"});
        }
    }
    sort_violations(out);
    return out;
}

std::vector<Violation> validate_workload(const WorkloadSpec& w) {
    std::vector<Violation> out;
    if (w.prompt_len_min < 0 || w.prompt_len_min > w.prompt_len_max) {
        out.push_back({"bad-prompt-range", "workload",
                       "require 0 <= prompt_len_min <= prompt_len_max"});
    }
    if (w.output_len_min < 0 || w.output_len_min > w.output_len_max) {
        out.push_back({"bad-output-range", "workload",
                       "require 0 <= output_len_min <= output_len_max"});
    }
    if (w.concurrency_target < 0) {
        out.push_back({"bad-concurrency", "workload", "concurrency_target must be >= 0"});
    }
    if (w.bench_duration_s <= 0) {
        out.push_back({"bad-duration", "workload", "bench_duration_s must be > 0"});
    }
    if (w.warmup_s < 0 || w.warmup_s >= w.bench_duration_s) {
        out.push_back({"bad-warmup", "workload", "require 0 <= warmup_s < bench_duration_s"});
    }
    sort_violations(out);
    return out;
}

std::vector<Violation> validate_pricing(const PricingSpec& p) {
    std::vector<Violation> out;
    if (p.compute_cost_per_hour_micro < 0 || p.price_per_token_nano < 0 ||
        p.price_in_per_token_nano < 0 || p.price_out_per_token_nano < 0) {
        out.push_back({"negative-price", "pricing", "all prices and costs must be >= 0"});
    }
    sort_violations(out);
    return out;
}

std::vector<Violation> validate_model(const ModelSpec& m) {
    std::vector<Violation> out;
    if (m.num_layers < 1) {
        out.push_back({"bad-layer-count", m.name, "num_layers must be >= 1"});
    }
    if (m.weight_bytes_total <= 0 || m.embedding_bytes <= 0 || m.output_layer_bytes <= 0 ||
        m.kv_bytes_per_token <= 0) {
        out.push_back({"nonpositive-bytes", m.name, "all model byte fields must be > 0"});
    }
    if (m.transformer_bytes() <= 0) {
        out.push_back({"bad-weight-split", m.name,
                       "embedding + output layer exceed weight_bytes_total"});
    }
    if (m.max_seq_len < 1) {
        out.push_back({"bad-max-seq-len", m.name, "max_seq_len must be >= 1"});
    }
    sort_violations(out);
    return out;
}

ModelSpec llama70b_preset() {
    ModelSpec m;
    m.name = "llama3-70b";
    m.num_layers = 80;
    m.weight_bytes_total = 130LL * (1LL << 30);  // 139,586,437,120
    m.embedding_bytes = 2LL * (1LL << 30);
    m.output_layer_bytes = 2LL * (1LL << 30);
    // 1.25 GiB per 4096-token sequence -> 320 KiB per token, exact.
    m.kv_bytes_per_token = (5LL * (1LL << 30) / 4) / 4096;
    m.max_seq_len = 4096;
    return m;
}

}  // namespace pipesim
