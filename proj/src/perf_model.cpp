#include "pipesim/perf_model.hpp"

#include <fstream>
#include <sstream>

namespace pipesim {

void validate_calibration(const CalibrationTable& cal) {
    if (cal.entries.size() < 2) {
        throw CalibrationError("calibration table needs at least two entries");
    }
    for (size_t i = 0; i < cal.entries.size(); ++i) {
        const auto& e = cal.entries[i];
        if (e.batch_size < 1 || e.total_time_us <= 0) {
            throw CalibrationError("calibration entries must have batch >= 1 and time > 0");
        }
        if (i > 0) {
            if (e.batch_size <= cal.entries[i - 1].batch_size) {
                throw CalibrationError("calibration batch sizes must strictly increase");
            }
            if (e.total_time_us < cal.entries[i - 1].total_time_us) {
                throw CalibrationError("calibration times must be non-decreasing");
            }
        }
    }
}

const CalibrationTable& default_calibration_table() {
    static const CalibrationTable table{{
        {1, 66600},
        {2, 68900},
        {4, 69100},
        {8, 69500},
        {16, 70300},
        {32, 76500},
        {64, 80200},
        {128, 89100},
        {256, 137500},
    }};
    return table;
}

// Parses a decimal millisecond value into exact integer microseconds.
static Micros parse_ms_exact(const std::string& s, const std::string& path) {
    std::string t = s;
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
    size_t dot = t.find('.');
    std::string whole = dot == std::string::npos ? t : t.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : t.substr(dot + 1);
    if (frac.size() > 3) {
        throw CalibrationError(path + ": sub-microsecond precision in '" + s + "'");
    }
    while (frac.size() < 3) frac += '0';
    try {
        Micros us = std::stoll(whole) * 1000 + (frac.empty() ? 0 : std::stoll(frac));
        return us;
    } catch (const std::exception&) {
        throw CalibrationError(path + ": bad time value '" + s + "'");
    }
}

CalibrationTable load_calibration_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError("cannot open calibration file " + path);
    CalibrationTable cal;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string batch, ms;
        if (!std::getline(ls, batch, ',') || !std::getline(ls, ms)) continue;
        if (!batch.empty() && !isdigit(static_cast<unsigned char>(batch[0]))) continue;  // header
        try {
            cal.entries.push_back({std::stoll(batch), parse_ms_exact(ms, path)});
        } catch (const CalibrationError&) {
            throw;
        } catch (const std::exception&) {
            throw CalibrationError(path + ": bad row '" + line + "'");
        }
    }
    validate_calibration(cal);
    return cal;
}

Micros stage_compute_time(const CalibrationTable& cal, std::int64_t batch_size) {
    validate_calibration(cal);
    if (batch_size < 1) throw CalibrationError("batch_size must be >= 1");
    const auto& e = cal.entries;
    if (batch_size <= e.front().batch_size) return e.front().total_time_us;
    size_t i = e.size() - 2;
    for (size_t k = 0; k + 1 < e.size(); ++k) {
        if (batch_size <= e[k + 1].batch_size) { i = k; break; }
    }
    const auto& lo = e[i];
    const auto& hi = e[i + 1];
    if (batch_size == hi.batch_size) return hi.total_time_us;
    // Interpolates inside the segment, extrapolates above the last one.
    const std::int64_t db = hi.batch_size - lo.batch_size;
    const std::int64_t num = lo.total_time_us * db +
                             (hi.total_time_us - lo.total_time_us) * (batch_size - lo.batch_size);
    return (num + db / 2) / db;
}

Micros per_instance_time(const CalibrationTable& cal, std::int64_t batch_size) {
    const Micros total = stage_compute_time(cal, batch_size);
    return (2 * total + batch_size) / (2 * batch_size);
}

Micros scaled_stage_time(const CalibrationTable& cal, std::int64_t batch_size,
                         std::int64_t layers, std::int64_t ref_layers) {
    const Micros base = stage_compute_time(cal, batch_size);
    if (ref_layers <= 0 || layers == ref_layers) return base;
    return scale_round(base, layers, ref_layers);
}

Bytes page_bytes(const ModelSpec& model, StageFraction frac) {
    if (frac.layers <= 0 || frac.total_layers <= 0 || frac.layers > frac.total_layers) {
        throw std::invalid_argument("stage layer fraction must be in (0, 1]");
    }
    return ceil_div(kPageTokens * model.kv_bytes_per_token * frac.layers, frac.total_layers);
}

Bytes kv_bytes(const ModelSpec& model, Tokens tokens, StageFraction frac) {
    if (tokens < 0) throw std::invalid_argument("tokens must be >= 0");
    if (tokens == 0) return 0;
    return ceil_div(tokens, kPageTokens) * page_bytes(model, frac);
}

Bytes global_pool_size(Bytes pcie_bandwidth_bytes_per_s, Micros stage_time_us,
                       Bytes pool_page_bytes) {
    if (pcie_bandwidth_bytes_per_s <= 0 || stage_time_us <= 0 || pool_page_bytes <= 0) {
        throw std::invalid_argument("global_pool_size requires positive bandwidth, time, page");
    }
    const Bytes raw = pcie_bandwidth_bytes_per_s * stage_time_us / 1'000'000;
    return raw / pool_page_bytes * pool_page_bytes;
}

MemoryBudget memory_budget(const NodeSpec& node, Bytes stage_weight_bytes,
                           std::int64_t n_microbatches, Bytes m_global_pool,
                           bool offload) {
    if (n_microbatches < 1) throw PlanError("n_microbatches must be >= 1");
    MemoryBudget b;
    b.m_total = node.gpu_mem_bytes;
    b.m_weights = stage_weight_bytes;
    b.m_kv = b.m_total - b.m_weights;
    if (b.m_kv < 0) {
        throw PlanError("weights-exceed-memory: node " + node.node_id + " needs " +
                        std::to_string(stage_weight_bytes) + " weight bytes but has " +
                        std::to_string(node.gpu_mem_bytes));
    }
    b.n_microbatches = n_microbatches;
    b.offload = offload;
    b.m_global_pool = offload ? m_global_pool : 0;
    b.m_per_microbatch_no_offload = b.m_kv / n_microbatches;
    if (offload) {
        if (b.m_kv < 2 * b.m_global_pool) {
            throw PlanError("global-pools-exceed-kv-memory: node " + node.node_id +
                            " has M_KV=" + std::to_string(b.m_kv) + " < 2*M_G=" +
                            std::to_string(2 * b.m_global_pool));
        }
        b.m_per_microbatch_offload =
            (b.m_kv - 2 * b.m_global_pool) / n_microbatches + b.m_global_pool;
    } else {
        b.m_per_microbatch_offload = b.m_per_microbatch_no_offload;
    }
    return b;
}

std::int64_t max_batch_size(Bytes budget_bytes, const ModelSpec& model,
                            StageFraction frac, Tokens seq_len_budget) {
    if (seq_len_budget < 1) throw std::invalid_argument("seq_len_budget must be >= 1");
    if (budget_bytes <= 0) return 0;
    const Bytes per_request = kv_bytes(model, seq_len_budget, frac);
    return budget_bytes / per_request;
}

}  // namespace pipesim
