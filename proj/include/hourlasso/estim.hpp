#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace hourlasso::estim {

/// Least squares via column-pivoted QR.
///
/// Rejects designs whose normal matrix X'X has condition number above 1e12
/// (equivalently, cond(X) > 1e6); the error names the first dependent column
/// in pivot order.
Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct Autocovariance {
    Eigen::VectorXd gamma;    // gamma[k], k = 0..max_lag
    bool degenerate = false;  // gamma[0] == 0 (constant series)
};

/// Biased estimator gamma_k = (1/n) sum_t (x_t - mean)(x_{t+k} - mean).
Autocovariance sample_autocov(std::span<const double> x, int max_lag);
inline Autocovariance sample_autocov(const Eigen::VectorXd& x, int max_lag) {
    return sample_autocov(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), max_lag);
}

/// Stationary AR(p): x_t - intercept = sum_k phi_k (x_{t-k} - intercept) + e_t.
struct ARFit {
    int order = 0;
    Eigen::VectorXd phi;  // phi[k-1] multiplies lag k
    double intercept = 0.0;
    double innovation_variance = 0.0;
};

/// Yule-Walker fits of order 0..p_max via the Levinson-Durbin recursion.
/// Intercepts are left at 0; callers set the series mean.
std::vector<ARFit> levinson_durbin(const Eigen::VectorXd& acov, int p_max);

/// AIC(p) = n ln(sigma2_p) + 2p. Ties (within 1e-9 relative) go to the smaller order.
int aic_select(std::span<const ARFit> fits, double n);

/// Largest modulus among eigenvalues of the AR companion matrix.
double companion_spectral_radius(const Eigen::VectorXd& phi);

/// Same for a VAR with coefficient matrices phi[0..p-1].
double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& phi);

/// Convenience: order-p_max Levinson-Durbin, AIC order choice, intercept = sample mean.
/// Constant series produce an order-0 fit with zero variance.
ARFit fit_ar_aic(std::span<const double> series, int p_max);

struct VARFit {
    int dimension = 0;
    int order = 0;
    std::vector<Eigen::MatrixXd> phi;  // phi[k-1] multiplies lag k (K x K)
    Eigen::VectorXd intercept;         // process mean
    Eigen::MatrixXd innovation_covariance;
    std::vector<double> aic;           // AIC by order 0..last order evaluated
};

/// Multivariate Yule-Walker with AIC(p) = D ln det(Sigma_p) + 2 K^2 p.
/// Each order solves its block-Toeplitz moment system directly; the search
/// stops at the first order whose system or residual covariance is singular.
VARFit multivar_yule_walker(const Eigen::MatrixXd& scores, int p_max);

struct PCAFactorization {
    Eigen::MatrixXd loadings;     // 24 x 24, orthonormal columns
    Eigen::VectorXd eigenvalues;  // ordered by descending |value|
    Eigen::VectorXd column_means;
};

PCAFactorization pca_fit(const Eigen::MatrixXd& rows);

/// Scores on the first k loadings: (row - means) * loadings.leftCols(k).
Eigen::MatrixXd pca_scores(const PCAFactorization& fact, const Eigen::MatrixXd& rows, int k);

/// Inverse map for k leading scores: scores * loadings.leftCols(k)' + means.
Eigen::MatrixXd pca_reconstruct(const PCAFactorization& fact, const Eigen::MatrixXd& scores);

} // namespace hourlasso::estim
