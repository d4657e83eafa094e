#pragma once

#include "pipesim/planner.hpp"
#include "pipesim/types.hpp"

// Config document: one JSON file with sections model, nodes, links, workload,
// pricing, scheduler, sweep. Field names mirror the domain types. Unknown
// fields are a hard parse error.

namespace pipesim {

struct RunConfig {
    ModelSpec model;
    Topology topology;
    WorkloadSpec workload;
    PricingSpec pricing;
    bool has_pricing = false;
    SchedulerPolicy scheduler;
    std::vector<Micros> sweep_latencies_us;
    std::string config_dir;  // for resolving relative calibration paths

    // All module validators in one pass; empty = clean.
    std::vector<Violation> validate() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text, const std::string& config_dir);

// Named model presets accepted where a model object is expected.
ModelSpec model_preset(const std::string& name);

}  // namespace pipesim
