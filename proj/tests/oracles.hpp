#pragma once

// Test-only reference computations. Each one takes a different route from
// the library code it is used to check.

#include "hourlasso/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Solves X'X b = X'y by full-pivot LU of the explicitly formed normal matrix.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd xtx = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * y;
    return xtx.fullPivLu().solve(xty);
}

struct GridMin {
    double b0 = 0.0;
    double b1 = 0.0;
};

/// Exhaustive search of (1/n)||y - X b||^2 + lambda ||b||_1 for m = 2 over
/// [-bound, bound]^2 at the given resolution.
inline GridMin lasso_grid_search_2d(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                                    double bound = 3.0, double step = 1e-3) {
    const double n = static_cast<double>(x.rows());
    const double g00 = x.col(0).squaredNorm() / n;
    const double g11 = x.col(1).squaredNorm() / n;
    const double g01 = x.col(0).dot(x.col(1)) / n;
    const double c0 = x.col(0).dot(y) / n;
    const double c1 = x.col(1).dot(y) / n;
    const int steps = static_cast<int>(std::lround(2.0 * bound / step));
    GridMin best;
    double best_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= steps; ++i) {
        const double b0 = -bound + i * step;
        for (int j = 0; j <= steps; ++j) {
            const double b1 = -bound + j * step;
            const double value = g00 * b0 * b0 + g11 * b1 * b1 + 2.0 * g01 * b0 * b1 - 2.0 * (c0 * b0 + c1 * b1) +
                                 lambda * (std::abs(b0) + std::abs(b1));
            if (value < best_value) {
                best_value = value;
                best = {b0, b1};
            }
        }
    }
    return best;
}

/// gamma_0..gamma_2 of a unit-innovation AR(2), from the 3x3 moment system
///   g0 = p1 g1 + p2 g2 + 1,  g1 = p1 g0 + p2 g1,  g2 = p1 g1 + p2 g0.
inline Eigen::Vector3d ar2_autocovariance(double p1, double p2) {
    Eigen::Matrix3d a;
    a << 1.0, -p1, -p2,
        -p1, 1.0 - p2, 0.0,
        -p2, -p1, 1.0;
    return a.fullPivLu().solve(Eigen::Vector3d(1.0, 0.0, 0.0));
}

/// x_t = sum_k phi_k x_{t-k} + e_t with a 1000-step burn-in.
inline std::vector<double> simulate_ar(const std::vector<double>& phi, int n, std::uint64_t seed,
                                       double sd = 1.0) {
    hourlasso::Rng rng(seed);
    const int burn = 1000;
    std::vector<double> x(static_cast<std::size_t>(n + burn), 0.0);
    for (int t = 0; t < n + burn; ++t) {
        double v = rng.normal(0.0, sd);
        for (std::size_t k = 0; k < phi.size(); ++k)
            if (t - 1 - static_cast<int>(k) >= 0) v += phi[k] * x[static_cast<std::size_t>(t - 1) - k];
        x[static_cast<std::size_t>(t)] = v;
    }
    return {x.begin() + burn, x.end()};
}

inline Eigen::MatrixXd random_matrix(hourlasso::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

inline Eigen::VectorXd random_vector(hourlasso::Rng& rng, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

} // namespace oracle
