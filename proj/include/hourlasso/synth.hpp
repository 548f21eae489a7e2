#pragma once

#include "hourlasso/dataio.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

namespace hourlasso::backtest {

/// Daily VAR panel: P_d = mean + offset(weekday(d)) + X_d with
/// X_d = sum_k phi[k-1] X_{d-k} + e_d, e_d ~ N(0, noise_sd^2 I).
struct SynthSpec {
    int days = 1000;
    dataio::Date start = dataio::parse_date("2012-01-01");
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(dataio::kHours, 40.0);
    std::vector<Eigen::MatrixXd> phi;  // 24 x 24 per day lag
    Eigen::MatrixXd weekday_offsets;   // 7 x 24, or empty
    double noise_sd = 1.0;
    int burn_in = 500;
};

/// Companion-form spectral radius of the spec's dynamics (0 without lags).
double spectral_radius(const SynthSpec& spec);

/// Throws UsageError for malformed or non-stationary specs.
Eigen::MatrixXd synth_prices(const SynthSpec& spec, std::uint64_t seed);
dataio::PricePanel synth_panel(const SynthSpec& spec, std::uint64_t seed);

/// Named scenarios: "cross-hour", "weekday", "seasonal-weekly".
SynthSpec synth_preset(std::string_view name, int days);

/// Replaces the diagonal of the lag-1 matrix by `value`.
void set_lag1_diagonal(SynthSpec& spec, double value);

} // namespace hourlasso::backtest
