#include "hourlasso/synth.hpp"

#include "hourlasso/errors.hpp"
#include "hourlasso/estim.hpp"
#include "hourlasso/rng.hpp"

#include <cmath>
#include <string>

namespace hourlasso::backtest {

using dataio::kHours;
using dataio::kWeekdays;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double spectral_radius(const SynthSpec& spec) {
    if (spec.phi.empty()) return 0.0;
    return estim::companion_spectral_radius(spec.phi);
}

namespace {

void validate(const SynthSpec& spec) {
    if (spec.days < 1) throw UsageError("synthetic panel needs at least one day");
    if (spec.burn_in < 0) throw UsageError("burn-in must be non-negative");
    if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) throw UsageError("noise sd must be finite and >= 0");
    if (spec.mean.size() != kHours) throw UsageError("mean profile needs 24 values");
    for (const auto& m : spec.phi)
        if (m.rows() != kHours || m.cols() != kHours) throw UsageError("lag matrices must be 24 x 24");
    if (spec.weekday_offsets.size() > 0 && (spec.weekday_offsets.rows() != kWeekdays || spec.weekday_offsets.cols() != kHours))
        throw UsageError("weekday offsets must be 7 x 24");
    const double radius = spectral_radius(spec);
    if (!(radius < 1.0))
        throw UsageError("non-stationary dynamics: companion spectral radius " + dataio::format_number(radius) +
                         " is not below 1");
}

// Low at night, a late-morning peak and an evening peak.
VectorXd daily_profile() {
    VectorXd mean(kHours);
    for (int h = 0; h < kHours; ++h) {
        const double morning = std::exp(-std::pow((h - 11.0) / 3.0, 2));
        const double evening = std::exp(-std::pow((h - 19.0) / 2.0, 2));
        mean(h) = 32.0 + 12.0 * morning + 9.0 * evening;
    }
    return mean;
}

MatrixXd weekday_pattern(double scale) {
    static constexpr double kBase[kWeekdays] = {-8.0, 1.0, 0.5, 0.5, 0.0, -1.0, -5.0};
    MatrixXd off(kWeekdays, kHours);
    for (int k = 0; k < kWeekdays; ++k)
        for (int h = 0; h < kHours; ++h) {
            const double daytime = (h >= 7 && h <= 21) ? 1.0 : 0.4;
            off(k, h) = scale * kBase[k] * daytime;
        }
    return off;
}

} // namespace

MatrixXd synth_prices(const SynthSpec& spec, std::uint64_t seed) {
    validate(spec);
    Rng rng(seed);
    const Index p = static_cast<Index>(spec.phi.size());
    const Index total = spec.burn_in + spec.days;
    MatrixXd x = MatrixXd::Zero(total, kHours);
    for (Index d = 0; d < total; ++d) {
        VectorXd next(kHours);
        for (int h = 0; h < kHours; ++h) next(h) = spec.noise_sd * rng.normal();
        for (Index k = 1; k <= p && k <= d; ++k)
            next.noalias() += spec.phi[static_cast<std::size_t>(k - 1)] * x.row(d - k).transpose();
        x.row(d) = next.transpose();
    }
    MatrixXd prices = x.bottomRows(spec.days).rowwise() + spec.mean.transpose();
    if (spec.weekday_offsets.size() > 0)
        for (Index d = 0; d < spec.days; ++d)
            prices.row(d) += spec.weekday_offsets.row(dataio::weekday_of(dataio::add_days(spec.start, d)));
    return prices;
}

dataio::PricePanel synth_panel(const SynthSpec& spec, std::uint64_t seed) {
    return {spec.start, synth_prices(spec, seed)};
}

SynthSpec synth_preset(std::string_view name, int days) {
    SynthSpec spec;
    spec.days = days;
    spec.mean = daily_profile();
    spec.noise_sd = 3.0;
    if (name == "cross-hour") {
        // Hour 0 follows the previous day's last hour, not its own lag.
        MatrixXd phi1 = 0.5 * MatrixXd::Identity(kHours, kHours);
        phi1.row(0).setZero();
        phi1(0, 23) = 0.8;
        spec.phi = {phi1};
        spec.weekday_offsets = weekday_pattern(1.0);
    } else if (name == "weekday") {
        spec.phi = {0.6 * MatrixXd::Identity(kHours, kHours)};
        spec.weekday_offsets = weekday_pattern(2.0);
    } else if (name == "seasonal-weekly") {
        spec.phi.assign(7, MatrixXd::Zero(kHours, kHours));
        spec.phi[0] = 0.3 * MatrixXd::Identity(kHours, kHours);
        spec.phi[6] = 0.5 * MatrixXd::Identity(kHours, kHours);
    } else {
        throw UsageError("unknown synthetic preset: " + std::string(name) +
                         " (expected cross-hour, weekday or seasonal-weekly)");
    }
    return spec;
}

void set_lag1_diagonal(SynthSpec& spec, double value) {
    if (spec.phi.empty()) spec.phi.push_back(MatrixXd::Zero(kHours, kHours));
    spec.phi[0].diagonal().setConstant(value);
}

} // namespace hourlasso::backtest
