#pragma once

#include <string>

#include "pipesim/types.hpp"

// Calibrated performance models: stage compute time as a function of batch
// size, KV-cache page arithmetic, and the per-microbatch memory budget with
// and without offloading.

namespace pipesim {

// Layer share of a stage, kept rational so page math stays exact.
struct StageFraction {
    std::int64_t layers = 1;
    std::int64_t total_layers = 1;
};

class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

// Throws CalibrationError unless batch sizes strictly increase, times are
// non-decreasing, and there are at least two entries.
void validate_calibration(const CalibrationTable& cal);

// The bundled default calibration (nine measured batch/time pairs).
const CalibrationTable& default_calibration_table();

// Two-column CSV: batch_size,total_time_ms (optional header). Millisecond
// values are parsed as exact decimals, not floats.
CalibrationTable load_calibration_csv(const std::string& path);

// Exact at calibrated points, piecewise-linear between them, linear
// extrapolation from the last segment above the table, constant below it.
Micros stage_compute_time(const CalibrationTable& cal, std::int64_t batch_size);

// stage_compute_time / batch_size, rounded to the nearest microsecond.
Micros per_instance_time(const CalibrationTable& cal, std::int64_t batch_size);

// Compute time for a stage holding `layers` transformer layers when the
// calibration describes a stage of `ref_layers` (0 = no scaling).
Micros scaled_stage_time(const CalibrationTable& cal, std::int64_t batch_size,
                         std::int64_t layers, std::int64_t ref_layers);

// Bytes of one KV page for a stage holding this layer fraction.
Bytes page_bytes(const ModelSpec& model, StageFraction frac);

// KV bytes for `tokens` tokens at this stage, rounded up to page granularity.
Bytes kv_bytes(const ModelSpec& model, Tokens tokens, StageFraction frac);

// M_G = W x T_S, floored to a whole number of pages.
Bytes global_pool_size(Bytes pcie_bandwidth_bytes_per_s, Micros stage_time_us,
                       Bytes pool_page_bytes);

struct MemoryBudget {
    Bytes m_total = 0;                       // M
    Bytes m_weights = 0;                     // M_W
    Bytes m_kv = 0;                          // M_KV = M - M_W
    Bytes m_global_pool = 0;                 // M_G
    std::int64_t n_microbatches = 0;         // N_B
    Bytes m_per_microbatch_no_offload = 0;   // M_B  = floor(M_KV / N_B)
    Bytes m_per_microbatch_offload = 0;      // M_B' = floor((M_KV - 2 M_G)/N_B) + M_G
    bool offload = false;

    Bytes per_microbatch() const {
        return offload ? m_per_microbatch_offload : m_per_microbatch_no_offload;
    }
    // GPU-resident pool that is never swapped out.
    Bytes local_pool_bytes() const { return per_microbatch() - m_global_pool; }
};

// Errors: "weights-exceed-memory" if the stage weights do not fit,
// "global-pools-exceed-kv-memory" if offloading with 2 M_G > M_KV.
MemoryBudget memory_budget(const NodeSpec& node, Bytes stage_weight_bytes,
                           std::int64_t n_microbatches, Bytes m_global_pool,
                           bool offload);

// Largest B with B x kv_bytes(model, seq_len_budget, frac) <= budget_bytes.
// Returns 0 when even one request does not fit.
std::int64_t max_batch_size(Bytes budget_bytes, const ModelSpec& model,
                            StageFraction frac, Tokens seq_len_budget);

}  // namespace pipesim
