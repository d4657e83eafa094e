#include "pipesim/planner.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace pipesim {

using nlohmann::json;

Micros PipelinePlan::total_hop_latency_us() const {
    Micros sum = 0;
    for (const auto& l : ring_links) sum += l.latency_us;
    return sum;
}

std::vector<LayerRange> partition_layers(const ModelSpec& model, const Topology& topo,
                                         const std::vector<std::string>& node_order,
                                         std::int64_t kv_reserve_permille) {
    const std::int64_t total_layers = model.num_layers;
    const std::int64_t n = static_cast<std::int64_t>(node_order.size());
    if (n < 1) throw PlanError("partition requires at least one node");
    if (n > total_layers) throw PlanError("more nodes than layers");

    std::vector<Bytes> usable(n);
    Bytes usable_sum = 0;
    Bytes mem_sum = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const NodeSpec* node = topo.find_node(node_order[i]);
        if (!node) throw PlanError("unknown node in ring order: " + node_order[i]);
        usable[i] = node->gpu_mem_bytes - node->gpu_mem_bytes * kv_reserve_permille / 1000;
        if (usable[i] < 1) usable[i] = 1;
        usable_sum += usable[i];
        mem_sum += node->gpu_mem_bytes;
    }
    if (mem_sum <= model.weight_bytes_total) {
        throw PlanError("insufficient-total-memory: " + std::to_string(mem_sum) +
                        " bytes across nodes for " + std::to_string(model.weight_bytes_total) +
                        " weight bytes");
    }

    // Proportional share with largest-remainder rounding, then bump empty
    // ranges to one layer, stealing from the largest share.
    std::vector<std::int64_t> counts(n);
    std::vector<std::pair<Bytes, std::int64_t>> rema(n);  // (remainder, index)
    std::int64_t assigned = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const Bytes num = total_layers * usable[i];
        counts[i] = num / usable_sum;
        rema[i] = {num % usable_sum, i};
        assigned += counts[i];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::int64_t k = 0; assigned < total_layers; ++k, ++assigned) {
        counts[rema[k % n].second]++;
    }
    for (std::int64_t i = 0; i < n; ++i) {
        while (counts[i] == 0) {
            auto mx = std::max_element(counts.begin(), counts.end());
            if (*mx <= 1) throw PlanError("cannot give every node a layer");
            (*mx)--;
            counts[i]++;
        }
    }

    std::vector<LayerRange> ranges(n);
    std::int64_t at = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        ranges[i] = {at, at + counts[i]};
        at += counts[i];
    }
    return ranges;
}

std::int64_t min_bubble_free_microbatches(std::int64_t n_stages, Micros stage_time_us,
                                          Micros hop_latency_us) {
    return min_bubble_free_microbatches_total(n_stages, stage_time_us,
                                              n_stages * hop_latency_us);
}

std::int64_t min_bubble_free_microbatches_total(std::int64_t n_stages, Micros stage_time_us,
                                                Micros total_hop_latency_us) {
    if (stage_time_us <= 0) throw PlanError("stage_time_us must be > 0");
    if (n_stages < 1) throw PlanError("n_stages must be >= 1");
    return n_stages + ceil_div(total_hop_latency_us, stage_time_us);
}

std::vector<std::string> ring_node_order(const Topology& topo, const std::string& mode) {
    std::vector<std::string> order;
    order.reserve(topo.nodes.size());
    for (const auto& n : topo.nodes) order.push_back(n.node_id);
    if (mode == "config" || order.size() <= 2) return order;
    if (mode != "nearest") throw PlanError("unknown ring_order mode: " + mode);

    // Greedy nearest-neighbor tour from the first config node.
    std::vector<std::string> tour{order.front()};
    std::vector<bool> used(order.size(), false);
    used[0] = true;
    while (tour.size() < order.size()) {
        Micros best = -1;
        std::int64_t pick = -1;
        for (size_t i = 0; i < order.size(); ++i) {
            if (used[i]) continue;
            const LinkSpec* l = topo.find_link(tour.back(), order[i]);
            const Micros lat = l ? l->latency_us : std::numeric_limits<Micros>::max();
            if (pick < 0 || lat < best) {
                best = lat;
                pick = static_cast<std::int64_t>(i);
            }
        }
        used[pick] = true;
        tour.push_back(order[pick]);
    }
    return tour;
}

static std::vector<LinkSpec> collect_ring_links(const Topology& topo,
                                                const std::vector<std::string>& order) {
    std::vector<LinkSpec> links;
    const size_t n = order.size();
    if (n < 2) return links;
    for (size_t i = 0; i < n; ++i) {
        const std::string& src = order[i];
        const std::string& dst = order[(i + 1) % n];
        const LinkSpec* l = topo.find_link(src, dst);
        if (!l) {
            throw PlanError("missing-link: plan needs " + src + " -> " + dst +
                            " but the topology defines no such link");
        }
        links.push_back(*l);
    }
    return links;
}

PipelinePlan plan(const ModelSpec& model, const Topology& topo, const WorkloadSpec& workload,
                  const SchedulerPolicy& policy) {
    auto violations = validate_topology(topo);
    if (!violations.empty()) {
        throw PlanError("topology invalid: " + violations.front().message);
    }
    const Tokens seq_budget = workload.prompt_len_max + workload.output_len_max;
    if (seq_budget < 1) throw PlanError("workload admits zero-size requests only");
    if (seq_budget > model.max_seq_len) {
        throw PlanError("per-request KV budget " + std::to_string(seq_budget) +
                        " tokens exceeds model max_seq_len " +
                        std::to_string(model.max_seq_len));
    }

    const auto order = ring_node_order(topo, policy.ring_order);
    const auto ranges = partition_layers(model, topo, order, policy.kv_reserve_permille);
    const auto ring = collect_ring_links(topo, order);
    const std::int64_t S = static_cast<std::int64_t>(order.size());

    Micros sum_lat = 0;
    for (const auto& l : ring) sum_lat += l.latency_us;

    struct StageCtx {
        const NodeSpec* node;
        LayerRange range;
        Bytes weights;
        StageFraction frac;
        Bytes page;
        Bytes kv_per_request;
    };
    std::vector<StageCtx> ctx(S);
    for (std::int64_t i = 0; i < S; ++i) {
        StageCtx& c = ctx[i];
        c.node = topo.find_node(order[i]);
        c.range = ranges[i];
        c.weights = model.layer_range_bytes(c.range.begin, c.range.end);
        if (i == 0) c.weights += model.embedding_bytes;
        if (i == S - 1) c.weights += model.output_layer_bytes;
        c.frac = {c.range.size(), model.num_layers};
        c.page = page_bytes(model, c.frac);
        c.kv_per_request = kv_bytes(model, seq_budget, c.frac);
        if (c.node->gpu_mem_bytes < c.weights) {
            throw PlanError("weights-exceed-memory: node " + c.node->node_id +
                            " cannot hold its stage weights");
        }
    }

    // Fixed point over (batch -> T_S -> M_G, N_B -> budget -> batch).
    // Initial guess: equal no-offload share with one microbatch per stage.
    std::int64_t batch = std::numeric_limits<std::int64_t>::max();
    for (const auto& c : ctx) {
        batch = std::min(batch, max_batch_size((c.node->gpu_mem_bytes - c.weights) / S,
                                               model, c.frac, seq_budget));
    }
    if (batch < 1) batch = 1;

    constexpr std::int64_t kMaxIterations = 32;
    struct Iterate {
        Micros t_s = 0;
        std::int64_t n_b = 0;
        std::vector<MemoryBudget> budgets;
        std::vector<Micros> stage_times;
        std::int64_t batch = 0;
    };
    Iterate good;  // last feasible iterate
    bool converged = false;
    std::int64_t iter = 0;

    for (iter = 1; iter <= kMaxIterations; ++iter) {
        Iterate cur;
        cur.budgets.resize(S);
        cur.stage_times.resize(S);
        for (std::int64_t i = 0; i < S; ++i) {
            cur.stage_times[i] = scaled_stage_time(ctx[i].node->calibration, batch,
                                                   ctx[i].range.size(),
                                                   policy.calibration_ref_layers);
            cur.t_s = std::max(cur.t_s, cur.stage_times[i]);
        }
        const Micros pool_time =
            policy.pool_time_basis == "slot" ? cur.t_s + sum_lat / S : cur.t_s;

        cur.n_b = policy.nb_override > 0
                      ? policy.nb_override
                      : min_bubble_free_microbatches_total(S, cur.t_s, sum_lat);

        std::int64_t next = std::numeric_limits<std::int64_t>::max();
        for (std::int64_t i = 0; i < S; ++i) {
            Bytes m_g = 0;
            if (policy.offload) {
                m_g = global_pool_size(ctx[i].node->pcie_bandwidth_bytes_per_s, pool_time,
                                       ctx[i].page);
                m_g = m_g * policy.pool_scale_milli / 1000 / ctx[i].page * ctx[i].page;
            }
            cur.budgets[i] =
                memory_budget(*ctx[i].node, ctx[i].weights, cur.n_b, m_g, policy.offload);
            next = std::min(next, cur.budgets[i].per_microbatch() / ctx[i].kv_per_request);
        }
        if (next < 1) {
            if (good.batch > 0) break;  // keep the last feasible iterate
            throw PlanError("infeasible-memory: not even one request per microbatch fits");
        }
        cur.batch = next;
        good = std::move(cur);
        if (next == batch) {
            converged = true;
            break;
        }
        batch = next;
    }
    batch = good.batch;
    const Micros t_s = good.t_s;
    const std::int64_t n_b = good.n_b;
    const std::vector<MemoryBudget>& budgets = good.budgets;
    const std::vector<Micros>& stage_times = good.stage_times;

    PipelinePlan p;
    p.n_microbatches = n_b;
    p.ring_links = ring;
    p.stage_time_us = t_s;
    p.offload_enabled = policy.offload;
    p.converged = converged;
    p.iterations = std::min(iter, kMaxIterations);
    p.seq_budget_tokens = seq_budget;
    p.policy = policy;
    for (std::int64_t i = 0; i < S; ++i) {
        StagePlan sp;
        sp.node_id = order[i];
        sp.layers = ctx[i].range;
        sp.stage_weight_bytes = ctx[i].weights;
        sp.pcie_bandwidth_bytes_per_s = ctx[i].node->pcie_bandwidth_bytes_per_s;
        sp.budget = budgets[i];
        sp.batch_size_per_microbatch = batch;
        sp.stage_time_us = stage_times[i];
        p.stages.push_back(std::move(sp));
    }
    return p;
}

static json link_to_json(const LinkSpec& l) {
    return json{{"src", l.src},
                {"dst", l.dst},
                {"latency_us", l.latency_us},
                {"bandwidth_bytes_per_s", l.bandwidth_bytes_per_s}};
}

static LinkSpec link_from_json(const json& j) {
    LinkSpec l;
    l.src = j.at("src").get<std::string>();
    l.dst = j.at("dst").get<std::string>();
    l.latency_us = j.at("latency_us").get<Micros>();
    l.bandwidth_bytes_per_s = j.at("bandwidth_bytes_per_s").get<Bytes>();
    return l;
}

std::string PipelinePlan::to_json() const {
    json j;
    j["n_microbatches"] = n_microbatches;
    j["stage_time_us"] = stage_time_us;
    j["offload_enabled"] = offload_enabled;
    j["converged"] = converged;
    j["iterations"] = iterations;
    j["seq_budget_tokens"] = seq_budget_tokens;
    j["policy"] = {{"offload", policy.offload},
                   {"nb_override", policy.nb_override},
                   {"prefill_chunk", policy.prefill_chunk},
                   {"hidden_bytes_per_token", policy.hidden_bytes_per_token},
                   {"kv_reserve_permille", policy.kv_reserve_permille},
                   {"calibration_ref_layers", policy.calibration_ref_layers},
                   {"ring_order", policy.ring_order},
                   {"pool_scale_milli", policy.pool_scale_milli},
                   {"pool_time_basis", policy.pool_time_basis}};
    j["stages"] = json::array();
    for (const auto& s : stages) {
        j["stages"].push_back(
            {{"node_id", s.node_id},
             {"layer_begin", s.layers.begin},
             {"layer_end", s.layers.end},
             {"stage_weight_bytes", s.stage_weight_bytes},
             {"pcie_bandwidth_bytes_per_s", s.pcie_bandwidth_bytes_per_s},
             {"batch_size_per_microbatch", s.batch_size_per_microbatch},
             {"stage_time_us", s.stage_time_us},
             {"budget",
              {{"m_total", s.budget.m_total},
               {"m_weights", s.budget.m_weights},
               {"m_kv", s.budget.m_kv},
               {"m_global_pool", s.budget.m_global_pool},
               {"n_microbatches", s.budget.n_microbatches},
               {"m_per_microbatch_no_offload", s.budget.m_per_microbatch_no_offload},
               {"m_per_microbatch_offload", s.budget.m_per_microbatch_offload},
               {"offload", s.budget.offload}}}});
    }
    j["ring_links"] = json::array();
    for (const auto& l : ring_links) j["ring_links"].push_back(link_to_json(l));
    return j.dump(2) + "\n";
}

PipelinePlan PipelinePlan::from_json(const std::string& text) {
    json j = json::parse(text);
    PipelinePlan p;
    p.n_microbatches = j.at("n_microbatches").get<std::int64_t>();
    p.stage_time_us = j.at("stage_time_us").get<Micros>();
    p.offload_enabled = j.at("offload_enabled").get<bool>();
    p.converged = j.at("converged").get<bool>();
    p.iterations = j.at("iterations").get<std::int64_t>();
    p.seq_budget_tokens = j.at("seq_budget_tokens").get<Tokens>();
    const json& pol = j.at("policy");
    p.policy.offload = pol.at("offload").get<bool>();
    p.policy.nb_override = pol.at("nb_override").get<std::int64_t>();
    p.policy.prefill_chunk = pol.at("prefill_chunk").get<std::int64_t>();
    p.policy.hidden_bytes_per_token = pol.at("hidden_bytes_per_token").get<Bytes>();
    p.policy.kv_reserve_permille = pol.at("kv_reserve_permille").get<std::int64_t>();
    p.policy.calibration_ref_layers = pol.at("calibration_ref_layers").get<std::int64_t>();
    p.policy.ring_order = pol.at("ring_order").get<std::string>();
    p.policy.pool_scale_milli = pol.at("pool_scale_milli").get<std::int64_t>();
    p.policy.pool_time_basis = pol.at("pool_time_basis").get<std::string>();
    for (const json& js : j.at("stages")) {
        StagePlan s;
        s.node_id = js.at("node_id").get<std::string>();
        s.layers = {js.at("layer_begin").get<std::int64_t>(),
                    js.at("layer_end").get<std::int64_t>()};
        s.stage_weight_bytes = js.at("stage_weight_bytes").get<Bytes>();
        s.pcie_bandwidth_bytes_per_s = js.at("pcie_bandwidth_bytes_per_s").get<Bytes>();
        s.batch_size_per_microbatch = js.at("batch_size_per_microbatch").get<std::int64_t>();
        s.stage_time_us = js.at("stage_time_us").get<Micros>();
        const json& jb = js.at("budget");
        s.budget.m_total = jb.at("m_total").get<Bytes>();
        s.budget.m_weights = jb.at("m_weights").get<Bytes>();
        s.budget.m_kv = jb.at("m_kv").get<Bytes>();
        s.budget.m_global_pool = jb.at("m_global_pool").get<Bytes>();
        s.budget.n_microbatches = jb.at("n_microbatches").get<std::int64_t>();
        s.budget.m_per_microbatch_no_offload =
            jb.at("m_per_microbatch_no_offload").get<Bytes>();
        s.budget.m_per_microbatch_offload = jb.at("m_per_microbatch_offload").get<Bytes>();
        s.budget.offload = jb.at("offload").get<bool>();
        p.stages.push_back(std::move(s));
    }
    for (const json& jl : j.at("ring_links")) p.ring_links.push_back(link_from_json(jl));
    return p;
}

std::string PipelinePlan::summary() const {
    std::ostringstream os;
    os << "pipeline: " << stages.size() << " stages, N_B=" << n_microbatches
       << ", T_S=" << stage_time_us << "us, batch=" << batch_size()
       << ", offload=" << (offload_enabled ? "on" : "off")
       << (converged ? "" : " (fixed point NOT converged)") << "\n";
    for (size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        os << "  stage " << i << ": " << s.node_id << " layers [" << s.layers.begin << ","
           << s.layers.end << ") weights=" << s.stage_weight_bytes
           << " M_KV=" << s.budget.m_kv << " M_G=" << s.budget.m_global_pool
           << " M_B=" << s.budget.per_microbatch() << " t=" << s.stage_time_us << "us\n";
    }
    return os.str();
}

}  // namespace pipesim
