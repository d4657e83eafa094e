#include "pipesim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "pipesim/economics.hpp"

namespace pipesim {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError(where + ": unknown field '" + it.key() + "'");
        }
    }
}

std::int64_t get_int(const json& j, const std::string& where, const std::string& key,
                     bool required, std::int64_t def = 0) {
    if (!j.contains(key)) {
        if (required) throw ConfigError(where + ": missing field '" + key + "'");
        return def;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw ConfigError(where + "." + key + ": expected an integer");
    }
    return v.get<std::int64_t>();
}

std::string get_str(const json& j, const std::string& where, const std::string& key,
                    bool required, const std::string& def = "") {
    if (!j.contains(key)) {
        if (required) throw ConfigError(where + ": missing field '" + key + "'");
        return def;
    }
    if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

bool get_bool(const json& j, const std::string& where, const std::string& key, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected a bool");
    return j.at(key).get<bool>();
}

// Money fields are human decimals in the file; stored at fixed resolution.
std::int64_t get_money(const json& j, const std::string& where, const std::string& key,
                       std::int64_t unit_per_one) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    const double scaled = v.get<double>() * static_cast<double>(unit_per_one);
    const double rounded = std::llround(scaled);
    if (std::abs(scaled - rounded) > 1e-3) {
        throw ConfigError(where + "." + key + ": finer than " +
                          std::to_string(unit_per_one) + " units per dollar");
    }
    return static_cast<std::int64_t>(rounded);
}

ModelSpec parse_model(const json& j) {
    if (j.is_string()) return model_preset(j.get<std::string>());
    if (!j.is_object()) throw ConfigError("model: expected an object or a preset name");
    reject_unknown(j, "model",
                   {"name", "num_layers", "weight_bytes_total", "embedding_bytes",
                    "output_layer_bytes", "kv_bytes_per_token", "max_seq_len"});
    ModelSpec m;
    m.name = get_str(j, "model", "name", false, "custom");
    m.num_layers = get_int(j, "model", "num_layers", true);
    m.weight_bytes_total = get_int(j, "model", "weight_bytes_total", true);
    m.embedding_bytes = get_int(j, "model", "embedding_bytes", true);
    m.output_layer_bytes = get_int(j, "model", "output_layer_bytes", true);
    m.kv_bytes_per_token = get_int(j, "model", "kv_bytes_per_token", true);
    m.max_seq_len = get_int(j, "model", "max_seq_len", true);
    return m;
}

CalibrationTable resolve_calibration(const std::string& ref, const std::string& dir) {
    if (ref == "table1" || ref.empty()) return default_calibration_table();
    std::string path = ref;
    if (!dir.empty() && ref.front() != '/') path = dir + "/" + ref;
    return load_calibration_csv(path);
}

}  // namespace

ModelSpec model_preset(const std::string& name) {
    if (name == "llama3-70b") return llama70b_preset();
    throw ConfigError("unknown model preset: " + name);
}

RunConfig parse_config(const std::string& text, const std::string& config_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(j, "config",
                   {"model", "nodes", "links", "workload", "pricing", "scheduler", "sweep"});

    RunConfig cfg;
    cfg.config_dir = config_dir;
    if (!j.contains("model")) throw ConfigError("config: missing section 'model'");
    cfg.model = parse_model(j.at("model"));

    if (!j.contains("nodes") || !j.at("nodes").is_array() || j.at("nodes").empty()) {
        throw ConfigError("config: 'nodes' must be a non-empty array");
    }
    for (const json& jn : j.at("nodes")) {
        reject_unknown(jn, "nodes[]",
                       {"node_id", "gpu_mem_bytes", "pcie_bandwidth_bytes_per_s",
                        "compute_calibration"});
        NodeSpec n;
        n.node_id = get_str(jn, "nodes[]", "node_id", true);
        n.gpu_mem_bytes = get_int(jn, "nodes[]", "gpu_mem_bytes", true);
        n.pcie_bandwidth_bytes_per_s = get_int(jn, "nodes[]", "pcie_bandwidth_bytes_per_s", true);
        n.calibration_name = get_str(jn, "nodes[]", "compute_calibration", false, "table1");
        n.calibration = resolve_calibration(n.calibration_name, config_dir);
        cfg.topology.nodes.push_back(std::move(n));
    }
    if (j.contains("links")) {
        if (!j.at("links").is_array()) throw ConfigError("config: 'links' must be an array");
        for (const json& jl : j.at("links")) {
            reject_unknown(jl, "links[]", {"src", "dst", "latency_us", "bandwidth_bytes_per_s"});
            LinkSpec l;
            l.src = get_str(jl, "links[]", "src", true);
            l.dst = get_str(jl, "links[]", "dst", true);
            l.latency_us = get_int(jl, "links[]", "latency_us", true);
            l.bandwidth_bytes_per_s = get_int(jl, "links[]", "bandwidth_bytes_per_s", true);
            cfg.topology.links.push_back(std::move(l));
        }
    }

    if (!j.contains("workload")) throw ConfigError("config: missing section 'workload'");
    {
        const json& jw = j.at("workload");
        reject_unknown(jw, "workload",
                       {"prompt_len_min", "prompt_len_max", "output_len_min", "output_len_max",
                        "concurrency_target", "bench_duration_s", "warmup_s", "rng_seed",
                        "trace_path"});
        WorkloadSpec& w = cfg.workload;
        w.prompt_len_min = get_int(jw, "workload", "prompt_len_min", true);
        w.prompt_len_max = get_int(jw, "workload", "prompt_len_max", true);
        w.output_len_min = get_int(jw, "workload", "output_len_min", true);
        w.output_len_max = get_int(jw, "workload", "output_len_max", true);
        w.concurrency_target = get_int(jw, "workload", "concurrency_target", true);
        w.bench_duration_s = get_int(jw, "workload", "bench_duration_s", true);
        w.warmup_s = get_int(jw, "workload", "warmup_s", true);
        w.rng_seed = static_cast<std::uint64_t>(get_int(jw, "workload", "rng_seed", false, 0));
        w.trace_path = get_str(jw, "workload", "trace_path", false);
        if (!w.trace_path.empty() && !config_dir.empty() && w.trace_path.front() != '/') {
            w.trace_path = config_dir + "/" + w.trace_path;
        }
    }

    if (j.contains("pricing")) {
        const json& jp = j.at("pricing");
        if (jp.contains("preset")) {
            reject_unknown(jp, "pricing", {"preset"});
            cfg.pricing = pricing_preset(jp.at("preset").get<std::string>());
        } else {
            reject_unknown(jp, "pricing",
                           {"compute_cost_per_hour", "price_per_token", "price_in_per_token",
                            "price_out_per_token"});
            PricingSpec& p = cfg.pricing;
            p.name = "config";
            p.compute_cost_per_hour_micro =
                get_money(jp, "pricing", "compute_cost_per_hour", 1'000'000);
            if (jp.contains("price_per_token")) {
                p.price_per_token_nano = get_money(jp, "pricing", "price_per_token",
                                                   1'000'000'000);
            }
            p.price_in_per_token_nano =
                jp.contains("price_in_per_token")
                    ? get_money(jp, "pricing", "price_in_per_token", 1'000'000'000)
                    : p.price_per_token_nano;
            p.price_out_per_token_nano =
                jp.contains("price_out_per_token")
                    ? get_money(jp, "pricing", "price_out_per_token", 1'000'000'000)
                    : p.price_per_token_nano;
            if (p.price_per_token_nano == 0 && p.price_in_per_token_nano == 0 &&
                p.price_out_per_token_nano == 0) {
                throw ConfigError("pricing: no price fields given");
            }
        }
        cfg.has_pricing = true;
    }

    if (j.contains("scheduler")) {
        const json& js = j.at("scheduler");
        reject_unknown(js, "scheduler",
                       {"offload", "nb_override", "prefill_chunk", "hidden_bytes_per_token",
                        "kv_reserve_fraction", "calibration_ref_layers", "ring_order",
                        "pool_scale", "pool_time_basis"});
        SchedulerPolicy& s = cfg.scheduler;
        s.offload = get_bool(js, "scheduler", "offload", s.offload);
        s.nb_override = get_int(js, "scheduler", "nb_override", false, s.nb_override);
        s.prefill_chunk = get_int(js, "scheduler", "prefill_chunk", false, s.prefill_chunk);
        s.hidden_bytes_per_token =
            get_int(js, "scheduler", "hidden_bytes_per_token", false, s.hidden_bytes_per_token);
        if (js.contains("kv_reserve_fraction")) {
            const double f = js.at("kv_reserve_fraction").get<double>();
            if (f < 0 || f >= 1) {
                throw ConfigError("scheduler.kv_reserve_fraction: must be in [0, 1)");
            }
            s.kv_reserve_permille = std::llround(f * 1000);
        }
        s.calibration_ref_layers =
            get_int(js, "scheduler", "calibration_ref_layers", false, s.calibration_ref_layers);
        s.ring_order = get_str(js, "scheduler", "ring_order", false, s.ring_order);
        if (js.contains("pool_scale")) {
            const double f = js.at("pool_scale").get<double>();
            if (f <= 0) throw ConfigError("scheduler.pool_scale: must be > 0");
            s.pool_scale_milli = std::llround(f * 1000);
        }
        s.pool_time_basis = get_str(js, "scheduler", "pool_time_basis", false, s.pool_time_basis);
        if (s.pool_time_basis != "compute" && s.pool_time_basis != "slot") {
            throw ConfigError("scheduler.pool_time_basis: must be 'compute' or 'slot'");
        }
        if (s.ring_order != "config" && s.ring_order != "nearest") {
            throw ConfigError("scheduler.ring_order: must be 'config' or 'nearest'");
        }
    }

    if (j.contains("sweep")) {
        const json& js = j.at("sweep");
        reject_unknown(js, "sweep", {"latencies_us"});
        if (!js.contains("latencies_us") || !js.at("latencies_us").is_array()) {
            throw ConfigError("sweep.latencies_us: expected an array");
        }
        for (const json& v : js.at("latencies_us")) {
            if (!v.is_number_integer() && !v.is_number_unsigned()) {
                throw ConfigError("sweep.latencies_us: expected integers");
            }
            cfg.sweep_latencies_us.push_back(v.get<Micros>());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string dir = ".";
    const size_t slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    return parse_config(ss.str(), dir);
}

std::vector<Violation> RunConfig::validate() const {
    std::vector<Violation> out = validate_topology(topology);
    auto add = [&out](std::vector<Violation> v) {
        out.insert(out.end(), v.begin(), v.end());
    };
    add(validate_model(model));
    add(validate_workload(workload));
    if (has_pricing) {
        add(validate_pricing(pricing));
        if (pricing.price_per_token_nano != 0 && !pricing.unified()) {
            // dual pricing is fine; a unified price contradicting P_I/P_O is not
            if (pricing.price_in_per_token_nano != pricing.price_per_token_nano ||
                pricing.price_out_per_token_nano != pricing.price_per_token_nano) {
                out.push_back({"inconsistent-unified-price", "pricing",
                               "price_per_token given but differs from P_I/P_O"});
            }
        }
    }
    for (const auto& n : topology.nodes) {
        try {
            validate_calibration(n.calibration);
        } catch (const CalibrationError& e) {
            out.push_back({"bad-calibration", n.node_id, e.what()});
        }
    }
    std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.entity != b.entity) return a.entity < b.entity;
        return a.message < b.message;
    });
    return out;
}

}  // namespace pipesim
