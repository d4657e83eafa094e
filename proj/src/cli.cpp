#include "pipesim/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "pipesim/config.hpp"
#include "pipesim/sweep.hpp"

namespace pipesim {

namespace fs = std::filesystem;

namespace {

std::string resolve_config_path(const std::string& path) {
    if (path.empty() || fs::exists(path) || path.front() == '/') return path;
    if (const char* dir = std::getenv("PIPESIM_CONFIG_DIR")) {
        const std::string alt = std::string(dir) + "/" + path;
        if (fs::exists(alt)) return alt;
    }
    return path;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw SimError("cannot write " + path);
    out << content;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    std::string policy;
    std::int64_t nb = 0;
    int parallel = 1;
};

RunConfig load_with_overrides(const CommonOpts& opts) {
    RunConfig cfg = load_config(resolve_config_path(opts.config_path));
    if (opts.seed >= 0) cfg.workload.rng_seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.nb > 0) cfg.scheduler.nb_override = opts.nb;
    return cfg;
}

int require_clean(const RunConfig& cfg, std::ostream& err) {
    const auto violations = cfg.validate();
    for (const auto& v : violations) {
        err << "violation: " << v.kind << " (" << v.entity << "): " << v.message << "\n";
    }
    return violations.empty() ? kExitOk : kExitValidation;
}

int cmd_validate(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = load_with_overrides(opts);
    const int rc = require_clean(cfg, err);
    if (rc == kExitOk) out << "config ok: " << cfg.topology.nodes.size() << " nodes, model "
                           << cfg.model.name << "\n";
    return rc;
}

SchedulerPolicy effective_policy(const RunConfig& cfg, const std::string& policy_name_str) {
    if (policy_name_str.empty()) return cfg.scheduler;
    return apply_policy(cfg.scheduler, policy_from_name(policy_name_str),
                        static_cast<std::int64_t>(cfg.topology.nodes.size()));
}

int cmd_plan(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = load_with_overrides(opts);
    const int rc = require_clean(cfg, err);
    if (rc != kExitOk) return rc;
    const PipelinePlan p = plan(cfg.model, cfg.topology, cfg.workload,
                                effective_policy(cfg, opts.policy));
    fs::create_directories(opts.out_dir);
    write_file(opts.out_dir + "/plan.json", p.to_json());
    out << p.summary();
    out << "plan written to " << opts.out_dir << "/plan.json\n";
    return kExitOk;
}

int cmd_run(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = load_with_overrides(opts);
    const int rc = require_clean(cfg, err);
    if (rc != kExitOk) return rc;
    const std::string polname = opts.policy.empty() ? "config" : opts.policy;
    const PipelinePlan p = plan(cfg.model, cfg.topology, cfg.workload,
                                effective_policy(cfg, opts.policy));
    const SimResult sim = run(p, cfg.topology, cfg.workload, cfg.model);

    ProfitAnalysis profit;
    const ProfitAnalysis* pp = nullptr;
    if (cfg.has_pricing) {
        profit = analyze(sim.report, cfg.pricing);
        pp = &profit;
    }
    const Micros lat = p.ring_links.empty() ? 0 : p.ring_links.front().latency_us;
    fs::create_directories(opts.out_dir);
    write_file(opts.out_dir + "/plan.json", p.to_json());
    write_file(opts.out_dir + "/report.kv", report_to_kv(sim.report, p, lat, polname, pp));
    write_trace_file(opts.out_dir + "/trace.log", sim.trace);

    out << "# seed=" << sim.report.rng_seed << " policy=" << polname << "\n";
    out << p.summary();
    out << "output_throughput=" << sim.report.output_throughput << " tok/s, total="
        << sim.report.total_throughput << " tok/s, completed="
        << sim.report.completed_requests << "\n";
    if (pp) {
        out << "profitable=" << (profit.profitable ? "yes" : "no")
            << " (min_throughput=" << profit.min_throughput << " tok/s)\n";
    }
    out << "report written to " << opts.out_dir << "\n";
    return kExitOk;
}

int cmd_sweep(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = load_with_overrides(opts);
    const int rc = require_clean(cfg, err);
    if (rc != kExitOk) return rc;

    std::vector<Policy> policies{Policy::Baseline, Policy::Offload, Policy::Opt};
    if (!opts.policy.empty()) policies = {policy_from_name(opts.policy)};

    const SweepResult sweep = run_sweep(cfg, policies, opts.parallel, true);
    fs::create_directories(opts.out_dir);
    write_file(opts.out_dir + "/sweep.csv", sweep.to_csv());
    for (const SweepCell& cell : sweep.cells) {
        if (cell.failed) {
            write_file(opts.out_dir + "/report." + cell.name() + ".kv",
                       "failed=1\nerror=" + cell.error + "\n");
            continue;
        }
        ProfitAnalysis profit;
        const ProfitAnalysis* pp = nullptr;
        if (cfg.has_pricing) {
            profit = analyze(cell.report, cfg.pricing);
            pp = &profit;
        }
        write_file(opts.out_dir + "/report." + cell.name() + ".kv",
                   report_to_kv(cell.report, cell.plan, cell.latency_us,
                                policy_name(cell.policy), pp));
        write_trace_file(opts.out_dir + "/trace." + cell.name() + ".log", cell.trace);
    }
    out << "# seed=" << cfg.workload.rng_seed << "\n";
    out << sweep.to_table();
    out << "sweep written to " << opts.out_dir << "\n";
    return kExitOk;
}

int cmd_replay_check(const std::string& plan_path, const std::string& trace_path,
                     std::ostream& out, std::ostream& err) {
    std::ifstream pin(plan_path);
    if (!pin) throw ConfigError("cannot open plan file " + plan_path);
    std::stringstream ss;
    ss << pin.rdbuf();
    const PipelinePlan p = PipelinePlan::from_json(ss.str());
    const EventTrace trace = read_trace_file(trace_path);
    const auto violations = replay_check(trace, p);
    for (const auto& v : violations) {
        err << "violation: " << v.kind << " (" << v.entity << "): " << v.message << "\n";
    }
    if (!violations.empty()) return kExitValidation;
    out << "trace clean: " << trace.size() << " events\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"deterministic pipeline-serving planner and simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string plan_path, trace_path;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* c = cmd->add_option("--config", opts.config_path, "config file path");
        if (needs_config) c->required();
        cmd->add_option("--out", opts.out_dir, "output directory");
        cmd->add_option("--seed", opts.seed, "override workload rng seed");
        cmd->add_option("--policy", opts.policy, "baseline|offload|opt");
        cmd->add_option("--nb", opts.nb, "override microbatch count");
        cmd->add_option("--parallel", opts.parallel, "worker threads for sweep cells");
    };

    CLI::App* validate = app.add_subcommand("validate", "parse and validate a config");
    add_common(validate, true);
    CLI::App* planc = app.add_subcommand("plan", "emit the pipeline plan");
    add_common(planc, true);
    CLI::App* runc = app.add_subcommand("run", "run one simulation");
    add_common(runc, true);
    CLI::App* sweepc = app.add_subcommand("sweep", "run the latency sweep matrix");
    add_common(sweepc, true);
    CLI::App* replayc = app.add_subcommand("replay-check", "re-validate a trace against a plan");
    replayc->add_option("--plan", plan_path, "plan json")->required();
    replayc->add_option("--trace", trace_path, "trace log")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;  // --help
        }
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(opts, out, err);
        if (planc->parsed()) return cmd_plan(opts, out, err);
        if (runc->parsed()) return cmd_run(opts, out, err);
        if (sweepc->parsed()) return cmd_sweep(opts, out, err);
        if (replayc->parsed()) return cmd_replay_check(plan_path, trace_path, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitParse;
    } catch (const CalibrationError& e) {
        err << "calibration error: " << e.what() << "\n";
        return kExitParse;
    } catch (const PlanError& e) {
        err << "plan error: " << e.what() << "\n";
        return kExitPlanInfeasible;
    } catch (const SimError& e) {
        err << "simulation error: " << e.what() << "\n";
        return kExitSimFailure;
    }
    return kExitUsage;
}

}  // namespace pipesim
