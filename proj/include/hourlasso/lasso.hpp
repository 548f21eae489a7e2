#pragma once

#include "hourlasso/errors.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hourlasso::lasso {

/// Which loss the penalty is added to.
///   Normalized: (1/n) ||y - X b||^2 + lambda ||b||_1   (default)
///   Raw:              ||y - X b||^2 + lambda ||b||_1
enum class Objective { Normalized, Raw };

struct GridSpec {
    double exponent_hi = 4.0;
    double exponent_lo = -15.0;
    int count = 50;  // number of powers of two; a trailing 0 is appended
};

/// {2^e : e equidistant from hi to lo} followed by 0, descending.
std::vector<double> lambda_grid(const GridSpec& spec = {});

/// Regression rescaled so the response and every kept column have unit
/// sample variance. Columns are scaled, never centered.
struct StandardizedProblem {
    Eigen::MatrixXd x;             // n x kept
    Eigen::VectorXd y;             // n
    double y_scale = 1.0;          // sample sd of the original response
    Eigen::VectorXd col_scales;    // sample sd of each kept column
    std::vector<Eigen::Index> kept;  // original column index of each kept column
    Eigen::Index original_cols = 0;
    std::vector<std::string> labels;   // one per original column
    std::vector<std::string> dropped;  // labels of zero-variance columns

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
};

/// Throws NumericError when y is constant; drops columns with variance <= 1e-12.
StandardizedProblem standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::vector<std::string> labels = {});

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

struct SolverOptions {
    Objective objective = Objective::Normalized;
    double tolerance = 1e-8;  // max |coefficient change| over a full sweep
    int max_sweeps = 100000;
    double kkt_tolerance = 1e-8;  // extra sweeps until the KKT gap is this small
    bool record_objective = false;  // keep the objective value after every sweep
    Eigen::Index max_support = 0;   // > 0: give up with SupportLimit beyond this many nonzeros
};

/// The solver would need more nonzero coefficients than SolverOptions::max_support.
class SupportLimit : public NumericError {
public:
    using NumericError::NumericError;
};

/// Coordinate descent with covariance updates.
///
/// The Gram matrix X'X and X'y are formed once, so solving many lambdas on
/// the same problem (a path) costs O(m) per coefficient update.
class CoordinateDescent {
public:
    CoordinateDescent(const StandardizedProblem& problem, SolverOptions options = {});

    /// Minimizes the objective at `lambda`, starting from `warm_start`.
    Eigen::VectorXd solve(double lambda, const Eigen::VectorXd& warm_start);

    int last_sweeps() const { return last_sweeps_; }
    const std::vector<double>& objective_trace() const { return trace_; }

    /// lambda above which the all-zero vector is optimal, in this objective's units.
    double lambda_max() const;

private:
    double penalty_weight(double lambda) const;  // multiplier on the (1/n)-loss scale

    SolverOptions options_;
    double n_;
    Eigen::MatrixXd gram_;  // X'X / n
    Eigen::VectorXd xty_;   // X'y / n
    double yty_;            // y'y / n
    int last_sweeps_ = 0;
    std::vector<double> trace_;
};

Eigen::VectorXd coordinate_descent(const StandardizedProblem& problem, double lambda,
                                   const Eigen::VectorXd& warm_start, SolverOptions options = {});

/// Largest violation of the lasso optimality conditions at `beta`, on the
/// normalized scale: gradient g = (2/n) X'(y - X beta) must satisfy
/// g_j = lambda sign(beta_j) where beta_j != 0 and |g_j| <= lambda otherwise.
double kkt_violation(const StandardizedProblem& problem, const Eigen::VectorXd& beta, double lambda,
                     Objective objective = Objective::Normalized);

struct BicValue {
    double value = 0.0;
    bool perfect_fit = false;  // RSS == 0, value is -infinity
};

/// n ln(RSS/n) + k ln(n), k = number of |beta_i| > 1e-12.
BicValue bic(const StandardizedProblem& problem, const Eigen::VectorXd& beta_tilde);

struct LassoPath {
    std::vector<double> lambdas;
    Eigen::MatrixXd betas;         // one row per lambda, standardized scale
    std::vector<double> bic_values;
    std::vector<bool> computed;    // false once the path saturates (wide designs only)
    std::vector<int> sweeps;
    int selected_index = 0;

    Eigen::VectorXd selected() const { return betas.row(selected_index).transpose(); }
    double selected_lambda() const { return lambdas[static_cast<std::size_t>(selected_index)]; }
};

struct PathOptions {
    GridSpec grid;
    SolverOptions solver;
};

/// Warm-started descent along the grid; BIC picks the model, ties go to the
/// larger lambda. On wide designs (m >= n - 1) the path saturates once a
/// solution would need more than n / 2 nonzeros: that lambda and all smaller
/// ones are marked not computed and never selected.
LassoPath fit_lasso_path(const StandardizedProblem& problem, const PathOptions& options = {});

/// Natural-unit coefficients for all original columns (dropped ones are 0).
Eigen::VectorXd unstandardize(const StandardizedProblem& problem, const Eigen::VectorXd& beta_tilde);

/// Standardized coefficients expanded to all original columns (dropped ones are 0).
Eigen::VectorXd expand_standardized(const StandardizedProblem& problem, const Eigen::VectorXd& beta_tilde);

} // namespace hourlasso::lasso
