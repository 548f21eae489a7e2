#pragma once

// Synthetic panels shared by the unit and acceptance tests.

#include "hourlasso/labels.hpp"
#include "hourlasso/rng.hpp"
#include "hourlasso/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

namespace scenario {

using hourlasso::models::RegressorLabel;

/// Daily lag dynamics with exactly `per_hour` nonzero coefficients in every
/// hourly equation, drawn from lags 1..3 of any source hour, magnitudes
/// 0.25..0.45 with random signs. The whole system is scaled down when its
/// companion spectral radius exceeds 0.9.
struct SparseDynamics {
    hourlasso::backtest::SynthSpec spec;
    std::vector<std::vector<RegressorLabel>> support;  // per hour
};

inline SparseDynamics sparse_dynamics(std::uint64_t seed, int days, double noise_sd, int per_hour = 5) {
    constexpr int kMaxLag = 3;
    hourlasso::Rng rng(seed);
    SparseDynamics out;
    out.spec.days = days;
    out.spec.noise_sd = noise_sd;
    out.spec.phi.assign(kMaxLag, Eigen::MatrixXd::Zero(24, 24));
    out.support.resize(24);
    for (int h = 0; h < 24; ++h) {
        auto& chosen = out.support[static_cast<std::size_t>(h)];
        while (static_cast<int>(chosen.size()) < per_hour) {
            const auto l = static_cast<int>(rng.below(24));
            const auto k = static_cast<int>(rng.below(kMaxLag)) + 1;
            const auto label = RegressorLabel::lag_of(l, k);
            if (std::find(chosen.begin(), chosen.end(), label) != chosen.end()) continue;
            chosen.push_back(label);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            out.spec.phi[static_cast<std::size_t>(k - 1)](h, l) = sign * rng.uniform(0.25, 0.45);
        }
    }
    for (double radius; (radius = hourlasso::backtest::spectral_radius(out.spec)) > 0.9;)
        for (auto& m : out.spec.phi) m *= 0.9 / radius;
    return out;
}

/// Panel whose rows are mean + noise only.
inline hourlasso::backtest::SynthSpec white_noise(int days, double mean = 40.0, double sd = 1.0) {
    hourlasso::backtest::SynthSpec spec;
    spec.days = days;
    spec.mean = Eigen::VectorXd::Constant(24, mean);
    spec.noise_sd = sd;
    return spec;
}

} // namespace scenario
