#include "hourlasso/estim.hpp"

#include "hourlasso/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hourlasso::estim {

namespace {

// sqrt of the 1e12 limit on cond(X'X)
constexpr double kMaxDesignCondition = 1e6;

bool aic_better(double candidate, double incumbent) {
    const double tie = 1e-9 * std::max(1.0, std::abs(incumbent));
    return candidate < incumbent - tie;
}

} // namespace

Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw UsageError("ols: X and y row counts differ");
    if (x.cols() == 0) return Eigen::VectorXd();
    if (x.rows() < x.cols())
        throw NumericError("ols: " + std::to_string(x.rows()) + " rows for " + std::to_string(x.cols()) +
                           " columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    const auto& r = qr.matrixR();
    const double top = std::abs(r(0, 0));
    if (top == 0.0) throw NumericError("ols: design matrix is zero");
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        if (std::abs(r(i, i)) < top / kMaxDesignCondition) {
            const auto col = qr.colsPermutation().indices()(i);
            throw NumericError("ols: rank-deficient design, column " + std::to_string(col) +
                               " is (numerically) dependent on the others");
        }
    }
    return qr.solve(y);
}

Autocovariance sample_autocov(std::span<const double> x, int max_lag) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (max_lag < 0 || n <= max_lag)
        throw UsageError("sample_autocov: need more than max_lag = " + std::to_string(max_lag) + " observations");
    Eigen::Map<const Eigen::VectorXd> series(x.data(), n);
    const Eigen::VectorXd centered = series.array() - series.mean();
    Autocovariance out;
    out.gamma.resize(max_lag + 1);
    for (int k = 0; k <= max_lag; ++k)
        out.gamma(k) = centered.head(n - k).dot(centered.tail(n - k)) / static_cast<double>(n);
    out.degenerate = !(out.gamma(0) > 0.0);
    if (out.degenerate) out.gamma.setZero();
    return out;
}

std::vector<ARFit> levinson_durbin(const Eigen::VectorXd& acov, int p_max) {
    if (p_max < 0 || acov.size() < p_max + 1)
        throw UsageError("levinson_durbin: autocovariance shorter than p_max + 1");
    if (!(acov(0) > 0.0)) throw NumericError("levinson_durbin: gamma_0 must be positive");

    std::vector<ARFit> fits;
    fits.reserve(static_cast<std::size_t>(p_max) + 1);
    fits.push_back(ARFit{0, Eigen::VectorXd(), 0.0, acov(0)});

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(p_max);
    Eigen::VectorXd prev(p_max);
    double variance = acov(0);
    for (int k = 1; k <= p_max; ++k) {
        double num = acov(k);
        for (int j = 1; j < k; ++j) num -= phi(j - 1) * acov(k - j);
        const double kappa = num / variance;
        if (!(std::abs(kappa) < 1.0))
            throw NumericError("levinson_durbin: reflection coefficient " + std::to_string(kappa) + " at order " +
                               std::to_string(k) + " (autocovariance not positive definite)");
        prev.head(k - 1) = phi.head(k - 1);
        for (int j = 1; j < k; ++j) phi(j - 1) = prev(j - 1) - kappa * prev(k - j - 1);
        phi(k - 1) = kappa;
        variance *= (1.0 - kappa * kappa);
        fits.push_back(ARFit{k, phi.head(k), 0.0, variance});
    }
    return fits;
}

int aic_select(std::span<const ARFit> fits, double n) {
    if (fits.empty()) throw UsageError("aic_select: no candidate fits");
    int best = -1;
    double best_aic = 0.0;
    for (const auto& fit : fits) {
        if (!(fit.innovation_variance > 0.0))
            throw NumericError("aic_select: non-positive innovation variance at order " + std::to_string(fit.order));
        const double aic = n * std::log(fit.innovation_variance) + 2.0 * fit.order;
        const bool tie = !aic_better(aic, best_aic) && !aic_better(best_aic, aic);
        if (best < 0 || aic_better(aic, best_aic) || (tie && fit.order < best)) {
            best = fit.order;
            best_aic = aic;
        }
    }
    return best;
}

double companion_spectral_radius(const Eigen::VectorXd& phi) {
    const auto p = phi.size();
    if (p == 0) return 0.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    companion.row(0) = phi.transpose();
    companion.bottomLeftCorner(p - 1, p - 1).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& phi) {
    if (phi.empty()) return 0.0;
    const auto k = phi.front().rows();
    const auto p = static_cast<Eigen::Index>(phi.size());
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k * p, k * p);
    for (Eigen::Index j = 0; j < p; ++j) companion.block(0, j * k, k, k) = phi[static_cast<std::size_t>(j)];
    if (p > 1) companion.bottomLeftCorner(k * (p - 1), k * (p - 1)).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

ARFit fit_ar_aic(std::span<const double> series, int p_max) {
    const auto n = static_cast<int>(series.size());
    if (n < 2) throw UsageError("fit_ar_aic: need at least two observations");
    const int max_order = std::min(p_max, n - 1);
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    const auto acov = sample_autocov(series, max_order);
    if (acov.degenerate) return ARFit{0, Eigen::VectorXd(), mean, 0.0};
    auto fits = levinson_durbin(acov.gamma, max_order);
    const int order = aic_select(fits, n);
    ARFit fit = std::move(fits[static_cast<std::size_t>(order)]);
    fit.intercept = mean;
    return fit;
}

VARFit multivar_yule_walker(const Eigen::MatrixXd& scores, int p_max) {
    const Eigen::Index d = scores.rows();
    const Eigen::Index k = scores.cols();
    if (k < 1) throw UsageError("multivar_yule_walker: need at least one series");
    if (p_max < 0 || d <= k * p_max)
        throw UsageError("multivar_yule_walker: " + std::to_string(d) + " rows is not more than K * p_max = " +
                         std::to_string(k * p_max));

    VARFit out;
    out.dimension = static_cast<int>(k);
    out.intercept = scores.colwise().mean().transpose();
    const Eigen::MatrixXd x = scores.rowwise() - out.intercept.transpose();

    // gamma[j] = (1/D) sum_t x_t x_{t-j}'
    std::vector<Eigen::MatrixXd> gamma(static_cast<std::size_t>(p_max) + 1);
    for (int j = 0; j <= p_max; ++j)
        gamma[static_cast<std::size_t>(j)] =
            x.bottomRows(d - j).transpose() * x.topRows(d - j) / static_cast<double>(d);
    auto lag_cov = [&](Eigen::Index j) -> Eigen::MatrixXd {
        return j >= 0 ? gamma[static_cast<std::size_t>(j)] : gamma[static_cast<std::size_t>(-j)].transpose();
    };

    // log det of a covariance, or NaN when it is not positive definite.
    auto log_det = [&](const Eigen::MatrixXd& sigma) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
        if (!(eig.eigenvalues().minCoeff() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return eig.eigenvalues().array().log().sum();
    };

    const double dd = static_cast<double>(d);
    const double kk = static_cast<double>(k * k);
    Eigen::MatrixXd sigma0 = 0.5 * (gamma[0] + gamma[0].transpose());
    const double ld0 = log_det(sigma0);
    if (std::isnan(ld0)) throw NumericError("multivar_yule_walker: singular covariance of the series");
    out.aic.push_back(dd * ld0);
    out.order = 0;
    out.innovation_covariance = sigma0;
    double best_aic = out.aic.front();

    for (int p = 1; p <= p_max; ++p) {
        const Eigen::Index size = k * p;
        Eigen::MatrixXd toeplitz(size, size);
        Eigen::MatrixXd rhs(size, k);  // C' where C = [gamma_1 ... gamma_p]
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) toeplitz.block(i * k, j * k, k, k) = lag_cov(j - i);
            rhs.block(i * k, 0, k, k) = gamma[static_cast<std::size_t>(i + 1)].transpose();
        }
        // A singular system or residual covariance ends the search: higher
        // orders only add parameters to an interpolating fit.
        Eigen::LLT<Eigen::MatrixXd> llt(toeplitz);
        if (llt.info() != Eigen::Success) break;
        const Eigen::MatrixXd coef_t = llt.solve(rhs);  // A'
        Eigen::MatrixXd sigma = gamma[0] - coef_t.transpose() * rhs;
        sigma = 0.5 * (sigma + sigma.transpose());
        const double ld = log_det(sigma);
        if (std::isnan(ld)) break;
        const double aic = dd * ld + 2.0 * kk * p;
        out.aic.push_back(aic);
        if (aic_better(aic, best_aic)) {
            best_aic = aic;
            out.order = p;
            out.innovation_covariance = sigma;
            out.phi.clear();
            for (Eigen::Index j = 0; j < p; ++j) out.phi.push_back(coef_t.block(j * k, 0, k, k).transpose());
        }
    }
    return out;
}

PCAFactorization pca_fit(const Eigen::MatrixXd& rows) {
    const Eigen::Index d = rows.rows();
    const Eigen::Index m = rows.cols();
    if (d < m) throw UsageError("pca_fit: need at least as many rows as columns");
    PCAFactorization out;
    out.column_means = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centered = rows.rowwise() - out.column_means.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(d - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericError("pca_fit: eigendecomposition did not converge");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto& values = eig.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(values(a)) > std::abs(values(b));
    });

    out.loadings.resize(m, m);
    out.eigenvalues.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto src = order[static_cast<std::size_t>(j)];
        Eigen::VectorXd column = eig.eigenvectors().col(src);
        Eigen::Index arg = 0;
        column.cwiseAbs().maxCoeff(&arg);
        if (column(arg) < 0.0) column = -column;
        out.loadings.col(j) = column;
        out.eigenvalues(j) = values(src);
    }
    return out;
}

Eigen::MatrixXd pca_scores(const PCAFactorization& fact, const Eigen::MatrixXd& rows, int k) {
    if (k < 1 || k > fact.loadings.cols())
        throw UsageError("pca_scores: K must be in 1.." + std::to_string(fact.loadings.cols()) + ", got " +
                         std::to_string(k));
    return (rows.rowwise() - fact.column_means.transpose()) * fact.loadings.leftCols(k);
}

Eigen::MatrixXd pca_reconstruct(const PCAFactorization& fact, const Eigen::MatrixXd& scores) {
    const auto k = scores.cols();
    Eigen::MatrixXd out = scores * fact.loadings.leftCols(k).transpose();
    out.rowwise() += fact.column_means.transpose();
    return out;
}

} // namespace hourlasso::estim
