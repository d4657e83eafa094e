#pragma once

#include "pipesim/sim.hpp"
#include "pipesim/types.hpp"

// Profit model over measured windows: revenue from token counts, the C/P
// break-even throughput, and the two profitability forms cross-checked.

namespace pipesim {

struct ProfitAnalysis {
    std::int64_t revenue_micro = 0;  // R, micro-dollars (floored)
    std::int64_t cost_micro = 0;     // C * T, micro-dollars (floored)
    std::int64_t profit_micro = 0;
    double min_throughput = 0;       // M_min = C / P, tokens/s
    double achieved_throughput = 0;  // M
    bool profitable = false;         // strict: M > M_min  <=>  R > C*T
};

// R = N_I * P_I + N_O * P_O, in micro-dollars (floored from nano).
std::int64_t revenue_micro(Tokens n_in, Tokens n_out, const PricingSpec& pricing);

// C / P in tokens per second. Throws on a zero price.
double min_throughput(const PricingSpec& pricing);

// Populates ProfitAnalysis from the report window. In unified-price mode the
// R > C*T and M > C/P forms are evaluated independently on exact integers and
// must agree; disagreement throws (it would mean an arithmetic bug).
ProfitAnalysis analyze(const SimReport& report, const PricingSpec& pricing);

// Bundled pricing presets (one per published cost snapshot). Lookup by name;
// throws ConfigError for unknown names. Names:
//   gcp-8xL4, runpod-8x4090, ionet-8x4090, whattomine-8x4090
const std::vector<PricingSpec>& pricing_presets();
const PricingSpec& pricing_preset(const std::string& name);

}  // namespace pipesim
