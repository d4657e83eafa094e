#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Shared domain vocabulary for the pipeline serving simulator.
// Conventions: all byte quantities are integer bytes, all times are integer
// microseconds, all token counts are integer tokens. Money is integer
// micro-dollars (per-hour costs) and integer nano-dollars per token (prices).

namespace pipesim {

using Bytes = std::int64_t;
using Micros = std::int64_t;
using Tokens = std::int64_t;

// KV page granularity: one page holds 256 tokens' worth of KV for whatever
// layer fraction the pool serves.
inline constexpr Tokens kPageTokens = 256;

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return (a + b - 1) / b;
}

// round(a * num / den) for non-negative a, half away from zero
inline std::int64_t scale_round(std::int64_t a, std::int64_t num, std::int64_t den) {
    return (2 * a * num + den) / (2 * den);
}

struct CalibrationEntry {
    std::int64_t batch_size = 0;
    Micros total_time_us = 0;
};

// Measured stage execution time as a function of batch size.
struct CalibrationTable {
    std::vector<CalibrationEntry> entries;
};

struct ModelSpec {
    std::string name;
    std::int64_t num_layers = 0;      // transformer layers only
    Bytes weight_bytes_total = 0;     // embedding + transformer + output
    Bytes embedding_bytes = 0;
    Bytes output_layer_bytes = 0;
    Bytes kv_bytes_per_token = 0;     // full model, all layers
    Tokens max_seq_len = 0;

    Bytes transformer_bytes() const {
        return weight_bytes_total - embedding_bytes - output_layer_bytes;
    }
    // Weight bytes of transformer layers [begin, end); exact integer split
    // that sums to transformer_bytes() over a full partition.
    Bytes layer_range_bytes(std::int64_t begin, std::int64_t end) const {
        const Bytes t = transformer_bytes();
        return t * end / num_layers - t * begin / num_layers;
    }
};

struct NodeSpec {
    std::string node_id;
    Bytes gpu_mem_bytes = 0;                 // M
    Bytes pcie_bandwidth_bytes_per_s = 0;    // W
    std::string calibration_name;            // resolved via CalibrationTable below
    CalibrationTable calibration;
};

struct LinkSpec {
    std::string src;
    std::string dst;
    Micros latency_us = 0;                   // one-way, fixed
    Bytes bandwidth_bytes_per_s = 0;
};

struct Topology {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;

    const NodeSpec* find_node(const std::string& id) const;
    const LinkSpec* find_link(const std::string& src, const std::string& dst) const;
};

struct WorkloadSpec {
    Tokens prompt_len_min = 0;
    Tokens prompt_len_max = 0;
    Tokens output_len_min = 0;
    Tokens output_len_max = 0;
    std::int64_t concurrency_target = 0;     // N_R
    std::int64_t bench_duration_s = 0;
    std::int64_t warmup_s = 0;
    std::uint64_t rng_seed = 0;
    std::string trace_path;                  // optional fixed request list
};

struct PricingSpec {
    std::string name;
    std::int64_t compute_cost_per_hour_micro = 0;  // C, micro-dollars/hour
    std::int64_t price_per_token_nano = 0;         // P, nano-dollars/token
    std::int64_t price_in_per_token_nano = 0;      // P_I
    std::int64_t price_out_per_token_nano = 0;     // P_O

    bool unified() const {
        return price_in_per_token_nano == price_per_token_nano &&
               price_out_per_token_nano == price_per_token_nano;
    }
};

struct Violation {
    std::string kind;     // e.g. "duplicate-node-id", "unknown-endpoint"
    std::string entity;   // offending node/link id
    std::string message;

    bool operator==(const Violation&) const = default;
};

// Empty result iff all Topology invariants hold. Violations are data, not
// faults; the list is canonically ordered so permuting the input yields an
// identical result.
std::vector<Violation> validate_topology(const Topology& topo);

std::vector<Violation> validate_workload(const WorkloadSpec& w);
std::vector<Violation> validate_pricing(const PricingSpec& p);
std::vector<Violation> validate_model(const ModelSpec& m);

// Llama 3 70B preset: 80 transformer layers, 130 GiB of weights, and the
// 1.25 GiB / 4096-token KV figure (320 KiB per token, bit-exact).
ModelSpec llama70b_preset();

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class PlanError : public std::runtime_error {
public:
    explicit PlanError(const std::string& what) : std::runtime_error(what) {}
};

class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pipesim
