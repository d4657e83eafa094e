#include "pipesim/sweep.hpp"

#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

namespace pipesim {

const char* policy_name(Policy p) {
    switch (p) {
        case Policy::Baseline: return "baseline";
        case Policy::Offload: return "offload";
        case Policy::Opt: return "opt";
    }
    return "?";
}

Policy policy_from_name(const std::string& name) {
    if (name == "baseline") return Policy::Baseline;
    if (name == "offload") return Policy::Offload;
    if (name == "opt") return Policy::Opt;
    throw ConfigError("unknown policy: " + name + " (want baseline|offload|opt)");
}

SchedulerPolicy apply_policy(const SchedulerPolicy& base, Policy p, std::int64_t n_stages) {
    SchedulerPolicy s = base;
    switch (p) {
        case Policy::Baseline:
            s.offload = false;
            s.nb_override = n_stages;
            break;
        case Policy::Offload:
            s.offload = true;
            s.nb_override = n_stages;
            break;
        case Policy::Opt:
            s.offload = true;
            s.nb_override = base.nb_override;  // 0 = auto unless user pinned it
            break;
    }
    return s;
}

Topology with_uniform_latency(const Topology& topo, Micros latency_us) {
    Topology t = topo;
    for (auto& l : t.links) l.latency_us = latency_us;
    return t;
}

std::string SweepCell::name() const {
    return std::string(policy_name(policy)) + ".l" + std::to_string(latency_us);
}

const SweepCell& SweepResult::at(Policy p, Micros latency_us) const {
    for (const auto& c : cells) {
        if (c.policy == p && c.latency_us == latency_us) return c;
    }
    throw SimError("sweep cell not found");
}

static std::string format_throughput(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string SweepResult::to_csv() const {
    std::ostringstream os;
    os << "policy";
    for (const Micros l : latencies_us) os << "," << l;
    os << "\n";
    for (const Policy p : policies) {
        os << policy_name(p);
        for (const Micros l : latencies_us) {
            const SweepCell& c = at(p, l);
            os << "," << (c.failed ? "failed" : format_throughput(c.report.output_throughput));
        }
        os << "\n";
    }
    return os.str();
}

std::string SweepResult::to_table() const {
    std::ostringstream os;
    os << "output throughput (tokens/s) by hop latency (us)\n";
    os << "policy";
    for (const Micros l : latencies_us) os << "\t" << l;
    os << "\n";
    for (const Policy p : policies) {
        os << policy_name(p);
        for (const Micros l : latencies_us) {
            const SweepCell& c = at(p, l);
            os << "\t" << (c.failed ? "failed" : format_throughput(c.report.output_throughput));
        }
        os << "\n";
    }
    return os.str();
}

SweepResult run_sweep(const RunConfig& config, const std::vector<Policy>& policies,
                      int parallel, bool keep_traces) {
    if (config.sweep_latencies_us.empty()) {
        throw ConfigError("sweep requires a non-empty sweep.latencies_us list");
    }
    SweepResult result;
    result.latencies_us = config.sweep_latencies_us;
    result.policies = policies;
    result.cells.resize(policies.size() * config.sweep_latencies_us.size());

    const std::int64_t n_stages = static_cast<std::int64_t>(config.topology.nodes.size());
    auto run_cell = [&](size_t idx) {
        SweepCell& cell = result.cells[idx];
        cell.policy = policies[idx / config.sweep_latencies_us.size()];
        cell.latency_us = config.sweep_latencies_us[idx % config.sweep_latencies_us.size()];
        try {
            const Topology topo = with_uniform_latency(config.topology, cell.latency_us);
            const SchedulerPolicy pol = apply_policy(config.scheduler, cell.policy, n_stages);
            cell.plan = plan(config.model, topo, config.workload, pol);
            SimResult sim = run(cell.plan, topo, config.workload, config.model);
            cell.report = sim.report;
            if (keep_traces) cell.trace = std::move(sim.trace);
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    };

    const size_t n = result.cells.size();
    if (parallel <= 1) {
        for (size_t i = 0; i < n; ++i) run_cell(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        const int k = std::min<int>(parallel, static_cast<int>(n));
        for (int w = 0; w < k; ++w) {
            workers.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_cell(i);
            });
        }
        for (auto& t : workers) t.join();
    }
    return result;
}

std::string report_to_kv(const SimReport& report, const PipelinePlan& plan, Micros latency_us,
                         const std::string& policy, const ProfitAnalysis* profit) {
    std::ostringstream os;
    char buf[64];
    auto emitf = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        os << key << "=" << buf << "\n";
    };
    os << "seed=" << report.rng_seed << "\n";
    os << "policy=" << policy << "\n";
    os << "latency_us=" << latency_us << "\n";
    os << "n_stages=" << plan.n_stages() << "\n";
    os << "n_microbatches=" << plan.n_microbatches << "\n";
    os << "batch_size=" << plan.batch_size() << "\n";
    os << "stage_time_us=" << plan.stage_time_us << "\n";
    os << "offload=" << (plan.offload_enabled ? 1 : 0) << "\n";
    os << "window_start_us=" << report.window_start_us << "\n";
    os << "window_end_us=" << report.window_end_us << "\n";
    os << "input_tokens=" << report.input_tokens << "\n";
    os << "output_tokens=" << report.output_tokens << "\n";
    emitf("wall_time_s", report.wall_time_s);
    emitf("input_throughput", report.input_throughput);
    emitf("output_throughput", report.output_throughput);
    emitf("total_throughput", report.total_throughput);
    emitf("mean_bubble_fraction", report.mean_bubble_fraction);
    emitf("max_bubble_fraction", report.max_bubble_fraction);
    os << "swap_stall_us=" << report.swap_stall_us << "\n";
    os << "completed_requests=" << report.completed_requests << "\n";
    os << "admitted_requests=" << report.admitted_requests << "\n";
    os << "live_requests=" << report.live_requests << "\n";
    for (size_t i = 0; i < report.stages.size(); ++i) {
        const StageMetrics& s = report.stages[i];
        std::snprintf(buf, sizeof(buf), "%.6f", s.busy_fraction);
        os << "stage." << i << ".busy_fraction=" << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.6f", s.bubble_fraction);
        os << "stage." << i << ".bubble_fraction=" << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.6f", s.transfer_wait_fraction);
        os << "stage." << i << ".transfer_wait_fraction=" << buf << "\n";
        os << "stage." << i << ".swap_stall_us=" << s.stall_us << "\n";
    }
    if (profit) {
        os << "revenue_micro_usd=" << profit->revenue_micro << "\n";
        os << "cost_micro_usd=" << profit->cost_micro << "\n";
        os << "profit_micro_usd=" << profit->profit_micro << "\n";
        emitf("min_throughput", profit->min_throughput);
        emitf("achieved_throughput", profit->achieved_throughput);
        os << "profitable=" << (profit->profitable ? 1 : 0) << "\n";
    }
    return os.str();
}

}  // namespace pipesim
