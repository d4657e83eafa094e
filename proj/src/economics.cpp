#include "pipesim/economics.hpp"

namespace pipesim {

std::int64_t revenue_micro(Tokens n_in, Tokens n_out, const PricingSpec& pricing) {
    if (n_in < 0 || n_out < 0) throw std::invalid_argument("token counts must be >= 0");
    const __int128 nano = static_cast<__int128>(n_in) * pricing.price_in_per_token_nano +
                          static_cast<__int128>(n_out) * pricing.price_out_per_token_nano;
    return static_cast<std::int64_t>(nano / 1000);
}

double min_throughput(const PricingSpec& pricing) {
    if (pricing.price_per_token_nano <= 0) {
        throw std::invalid_argument("min_throughput requires a positive price per token");
    }
    // (C micro$/h) / (P nano$/token) = 1000*C/P tokens/h.
    return 1000.0 * static_cast<double>(pricing.compute_cost_per_hour_micro) /
           (3600.0 * static_cast<double>(pricing.price_per_token_nano));
}

ProfitAnalysis analyze(const SimReport& report, const PricingSpec& pricing) {
    const Micros window = report.window_end_us - report.window_start_us;
    if (window <= 0) throw SimError("analyze: report window is empty");

    ProfitAnalysis pa;
    const Tokens n = report.input_tokens + report.output_tokens;
    pa.revenue_micro = revenue_micro(report.input_tokens, report.output_tokens, pricing);
    // cost = C * T: micro$ * us / (3600 * 1e6 us/h)
    const __int128 cost_num =
        static_cast<__int128>(pricing.compute_cost_per_hour_micro) * window;
    pa.cost_micro = static_cast<std::int64_t>(cost_num / 3'600'000'000LL);
    pa.profit_micro = pa.revenue_micro - pa.cost_micro;
    pa.min_throughput = min_throughput(pricing);
    pa.achieved_throughput = report.total_throughput;

    // Form 1, revenue vs cost: N_I*P_I + N_O*P_O > C*T.
    // nano$ both sides, exact: lhs_nano * 3600e6 > C_micro * 1000 * T_us.
    const __int128 lhs =
        (static_cast<__int128>(report.input_tokens) * pricing.price_in_per_token_nano +
         static_cast<__int128>(report.output_tokens) * pricing.price_out_per_token_nano) *
        3'600'000'000LL;
    const __int128 rhs =
        static_cast<__int128>(pricing.compute_cost_per_hour_micro) * 1000 * window;
    const bool form1 = lhs > rhs;

    if (pricing.unified()) {
        // Form 2, throughput vs threshold: M > C/P, cross-multiplied exactly:
        // N * 1e6 / T_us > 1000*C / (3600*P)  <=>  N * P * 36e8 > C * 1000 * T_us.
        const __int128 lhs2 = static_cast<__int128>(n) * pricing.price_per_token_nano *
                              3'600'000'000LL;
        const bool form2 = lhs2 > rhs;
        if (form1 != form2) {
            throw SimError("profitability forms disagree (arithmetic bug): R>CT=" +
                           std::to_string(form1) + " M>C/P=" + std::to_string(form2));
        }
    }
    pa.profitable = form1;
    return pa;
}

const std::vector<PricingSpec>& pricing_presets() {
    // Cost snapshots behind the published break-even table; example data, not
    // live rates. The GCP row's threshold (4,283.33 tok/s) corresponds to
    // $13.878/h, which its source table displays rounded to 13.88.
    static const std::vector<PricingSpec> presets = {
        {"gcp-8xL4", 13'878'000, 900, 900, 900},
        {"runpod-8x4090", 5'520'000, 900, 900, 900},
        {"ionet-8x4090", 3'690'000, 900, 900, 900},
        {"whattomine-8x4090", 350'000, 900, 900, 900},
    };
    return presets;
}

const PricingSpec& pricing_preset(const std::string& name) {
    for (const auto& p : pricing_presets()) {
        if (p.name == name) return p;
    }
    throw ConfigError("unknown pricing preset: " + name);
}

}  // namespace pipesim
