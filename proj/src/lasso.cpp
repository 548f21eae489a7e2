#include "hourlasso/lasso.hpp"

#include "hourlasso/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hourlasso::lasso {

namespace {

// KKT gap accepted from the feature-sign fallback when rounding on a
// near-collinear support keeps it from reaching the requested tolerance.
constexpr double kPrecisionGap = 1e-7;

constexpr double kMinVariance = 1e-12;
constexpr double kNonzero = 1e-12;

double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / (n - 1.0));
}

Eigen::Index count_nonzero(const Eigen::VectorXd& beta) {
    return (beta.array().abs() > kNonzero).count();
}

} // namespace

std::vector<double> lambda_grid(const GridSpec& spec) {
    if (spec.count < 2) throw UsageError("lambda grid needs at least two exponents");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(spec.count) + 1);
    const double steps = spec.count - 1;
    for (int k = 0; k < spec.count; ++k) {
        // one rounding: the numerator is exact for integer endpoints
        const double exponent = (spec.exponent_hi * (steps - k) + spec.exponent_lo * k) / steps;
        grid.push_back(std::exp2(exponent));
    }
    grid.push_back(0.0);
    return grid;
}

StandardizedProblem standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> labels) {
    const Eigen::Index n = x.rows();
    if (n != y.size()) throw UsageError("standardize: X and y row counts differ");
    if (n < 2) throw UsageError("standardize: need at least two rows");
    if (labels.empty()) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) labels.push_back("x" + std::to_string(j));
    } else if (static_cast<Eigen::Index>(labels.size()) != x.cols()) {
        throw UsageError("standardize: label count does not match column count");
    }

    StandardizedProblem prob;
    prob.y_scale = sample_sd(y);
    if (!(prob.y_scale * prob.y_scale > kMinVariance))
        throw NumericError("standardize: response is constant, cannot scale");
    prob.y = y / prob.y_scale;
    prob.original_cols = x.cols();
    prob.labels = std::move(labels);

    std::vector<double> scales;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double sd = sample_sd(x.col(j));
        if (sd * sd > kMinVariance) {
            prob.kept.push_back(j);
            scales.push_back(sd);
        } else {
            prob.dropped.push_back(prob.labels[static_cast<std::size_t>(j)]);
        }
    }
    const auto kept = static_cast<Eigen::Index>(prob.kept.size());
    prob.col_scales = Eigen::Map<Eigen::VectorXd>(scales.data(), kept);
    prob.x.resize(n, kept);
    for (Eigen::Index j = 0; j < kept; ++j)
        prob.x.col(j) = x.col(prob.kept[static_cast<std::size_t>(j)]) / prob.col_scales(j);
    return prob;
}

CoordinateDescent::CoordinateDescent(const StandardizedProblem& problem, SolverOptions options)
    : options_(options), n_(static_cast<double>(problem.rows())) {
    gram_.noalias() = problem.x.transpose() * problem.x;
    gram_ /= n_;
    xty_.noalias() = problem.x.transpose() * problem.y;
    xty_ /= n_;
    yty_ = problem.y.squaredNorm() / n_;
}

double CoordinateDescent::penalty_weight(double lambda) const {
    return options_.objective == Objective::Raw ? lambda / n_ : lambda;
}

double CoordinateDescent::lambda_max() const {
    const double normalized = xty_.size() == 0 ? 0.0 : 2.0 * xty_.cwiseAbs().maxCoeff();
    return options_.objective == Objective::Raw ? normalized * n_ : normalized;
}

Eigen::VectorXd CoordinateDescent::solve(double lambda, const Eigen::VectorXd& warm_start) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lasso: lambda must be finite and >= 0");
    const Eigen::Index m = xty_.size();
    if (warm_start.size() != m) throw UsageError("lasso: warm start has the wrong length");

    const double half_penalty = 0.5 * penalty_weight(lambda);
    Eigen::VectorXd beta = warm_start;
    Eigen::VectorXd resid_corr(m);  // X'(y - X beta) / n
    std::vector<Eigen::Index> active;
    active.reserve(static_cast<std::size_t>(m));

    auto update = [&](Eigen::Index j) {
        const double diag = gram_(j, j);
        const double old = beta(j);
        const double fresh = soft_threshold(resid_corr(j) + diag * old, half_penalty) / diag;
        const double delta = fresh - old;
        if (delta != 0.0) {
            beta(j) = fresh;
            resid_corr.noalias() -= gram_.col(j) * delta;
        }
        return std::abs(delta);
    };

    auto objective = [&](const Eigen::VectorXd& b) {
        return yty_ - 2.0 * xty_.dot(b) + b.dot(gram_ * b) + 2.0 * half_penalty * b.lpNorm<1>();
    };

    trace_.clear();
    auto record = [&] {
        if (!options_.record_objective) return;
        trace_.push_back(objective(beta));
    };

    int sweeps = 0;
    auto check_budget = [&] {
        if (++sweeps > options_.max_sweeps) {
            std::ostringstream msg;
            msg << "lasso: coordinate descent did not converge after " << options_.max_sweeps
                << " sweeps at lambda = " << lambda;
            throw NumericError(msg.str());
        }
    };

    auto kkt_gap = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& corr) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double g = corr(j);
            worst = std::max(worst, b(j) != 0.0 ? std::abs(g - std::copysign(half_penalty, b(j)))
                                                : std::max(0.0, std::abs(g) - half_penalty));
        }
        return 2.0 * worst;
    };

    // Feature-sign search: activates one coordinate at a time, solves the
    // stationarity equations on the support and line-searches over sign
    // changes. Used when coordinate descent stalls on an ill-conditioned
    // support; the result is returned only if it passes the KKT check.
    enum class Fallback { Failed, Solved, SupportLimit };
    auto feature_sign = [&](Eigen::VectorXd b) {
        const double tol = 0.5 * options_.kkt_tolerance;
        Eigen::VectorXd r = xty_ - gram_ * b;
        double current = objective(b);
        bool at_precision = false;  // last re-solve of this support changed nothing beyond rounding
        const int max_steps = 4 * static_cast<int>(m) + 100;
        for (int step = 0; step < max_steps; ++step) {
            std::vector<Eigen::Index> act;
            std::vector<double> theta;
            double noise = 0.0;  // stationarity error on the support
            for (Eigen::Index j = 0; j < m; ++j)
                if (b(j) != 0.0) {
                    act.push_back(j);
                    theta.push_back(b(j) > 0.0 ? 1.0 : -1.0);
                    noise = std::max(noise, std::abs(r(j) - std::copysign(half_penalty, b(j))));
                }
            const bool active_ok = noise <= tol;
            if (active_ok || at_precision) {
                Eigen::Index best = -1;
                double best_corr = half_penalty + std::max(tol, 2.0 * noise);
                for (Eigen::Index j = 0; j < m; ++j)
                    if (b(j) == 0.0 && std::abs(r(j)) > best_corr) {
                        best = j;
                        best_corr = std::abs(r(j));
                    }
                if (best < 0) {
                    if (kkt_gap(b, r) > kPrecisionGap) return Fallback::Failed;
                    beta = std::move(b);
                    resid_corr = std::move(r);
                    return Fallback::Solved;
                }
                if (options_.max_support > 0 && static_cast<Eigen::Index>(act.size()) >= options_.max_support)
                    return Fallback::SupportLimit;
                act.push_back(best);
                theta.push_back(r(best) > 0.0 ? 1.0 : -1.0);
            }

            const auto k = static_cast<Eigen::Index>(act.size());
            Eigen::MatrixXd g(k, k);
            Eigen::VectorXd c(k), cur(k);
            for (Eigen::Index i = 0; i < k; ++i) {
                const auto ji = act[static_cast<std::size_t>(i)];
                for (Eigen::Index q = 0; q < k; ++q) g(i, q) = gram_(ji, act[static_cast<std::size_t>(q)]);
                c(i) = xty_(ji);
                cur(i) = b(ji);
            }
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return Fallback::Failed;
            const Eigen::VectorXd rhs = c - half_penalty * Eigen::Map<const Eigen::VectorXd>(theta.data(), k);
            Eigen::VectorXd target = ldlt.solve(rhs);
            for (int refine = 0; refine < 3; ++refine) target += ldlt.solve(rhs - g * target);
            if (!target.allFinite()) return Fallback::Failed;

            // objective change from cur, written without the y'y term to avoid cancellation
            auto change = [&](const Eigen::VectorXd& v) {
                const Eigen::VectorXd d = v - cur;
                return -2.0 * c.dot(d) + d.dot(g * (v + cur)) + 2.0 * half_penalty * (v.lpNorm<1>() - cur.lpNorm<1>());
            };
            Eigen::VectorXd best_v = target;
            double best_obj = change(target);
            for (Eigen::Index i = 0; i < k; ++i) {
                if (cur(i) == 0.0 || std::signbit(cur(i)) == std::signbit(target(i))) continue;
                const double t = cur(i) / (cur(i) - target(i));
                Eigen::VectorXd v = cur + t * (target - cur);
                v(i) = 0.0;
                const double o = change(v);
                if (o < best_obj) {
                    best_obj = o;
                    best_v = std::move(v);
                }
            }
            const double slack = 1e-14 * (1.0 + std::abs(current));
            // an inaccurate solve on a nearly singular support can overshoot; back off along the segment
            for (double t = 0.5; !(best_obj <= slack) && t > 1e-12; t *= 0.5) {
                Eigen::VectorXd v = cur + t * (target - cur);
                const double o = change(v);
                if (o < best_obj) {
                    best_obj = o;
                    best_v = std::move(v);
                }
            }
            if (!(best_obj <= slack)) return Fallback::Failed;
            at_precision = !active_ok && !at_precision && best_obj >= -slack;
            current += best_obj;
            for (Eigen::Index i = 0; i < k; ++i) b(act[static_cast<std::size_t>(i)]) = best_v(i);
            r.noalias() = xty_ - gram_ * b;
        }
        return Fallback::Failed;
    };

    int next_fallback = 64;
    auto stalled = [&] {
        if (sweeps < next_fallback) return false;
        next_fallback *= 4;
        // a stalled iterate can carry more nonzeros than rows; restart from the warm start then
        const auto support = (beta.array() != 0.0).count();
        const auto status = feature_sign(static_cast<double>(support) < n_ ? beta : warm_start);
        if (status == Fallback::SupportLimit) {
            std::ostringstream msg;
            msg << "lasso: solution at lambda = " << lambda << " needs more than " << options_.max_support
                << " nonzero coefficients";
            throw SupportLimit(msg.str());
        }
        if (status == Fallback::Failed) return false;
        record();
        return true;
    };

    for (;;) {
        // full sweep over every coordinate, starting from exact correlations
        resid_corr.noalias() = xty_ - gram_ * beta;
        check_budget();
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) max_change = std::max(max_change, update(j));
        record();
        if (max_change < options_.tolerance) {
            resid_corr.noalias() = xty_ - gram_ * beta;
            if (kkt_gap(beta, resid_corr) <= options_.kkt_tolerance || stalled()) break;
            continue;
        }
        if (stalled()) break;

        active.clear();
        for (Eigen::Index j = 0; j < m; ++j)
            if (beta(j) != 0.0) active.push_back(j);
        bool solved = false;
        for (;;) {
            check_budget();
            double active_change = 0.0;
            for (auto j : active) active_change = std::max(active_change, update(j));
            record();
            if (active_change < options_.tolerance) break;
            if (stalled()) {
                solved = true;
                break;
            }
        }
        if (solved) break;
    }
    last_sweeps_ = sweeps;
    return beta;
}

Eigen::VectorXd coordinate_descent(const StandardizedProblem& problem, double lambda, const Eigen::VectorXd& warm_start,
                                   SolverOptions options) {
    if (!problem.x.allFinite() || !problem.y.allFinite() || !warm_start.allFinite())
        throw UsageError("lasso: non-finite input");
    CoordinateDescent solver(problem, options);
    return solver.solve(lambda, warm_start);
}

double kkt_violation(const StandardizedProblem& problem, const Eigen::VectorXd& beta, double lambda,
                     Objective objective) {
    const double n = static_cast<double>(problem.rows());
    const double penalty = objective == Objective::Raw ? lambda / n : lambda;
    const Eigen::VectorXd grad = 2.0 / n * (problem.x.transpose() * (problem.y - problem.x * beta));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double v = beta(j) != 0.0 ? std::abs(grad(j) - std::copysign(penalty, beta(j)))
                                        : std::max(0.0, std::abs(grad(j)) - penalty);
        worst = std::max(worst, v);
    }
    return worst;
}

BicValue bic(const StandardizedProblem& problem, const Eigen::VectorXd& beta_tilde) {
    if (!beta_tilde.allFinite()) throw UsageError("bic: non-finite coefficients");
    const double n = static_cast<double>(problem.rows());
    const double rss = (problem.y - problem.x * beta_tilde).squaredNorm();
    const double k = static_cast<double>(count_nonzero(beta_tilde));
    if (rss <= 0.0) return BicValue{-std::numeric_limits<double>::infinity(), true};
    return BicValue{n * std::log(rss / n) + k * std::log(n), false};
}

LassoPath fit_lasso_path(const StandardizedProblem& problem, const PathOptions& options) {
    LassoPath path;
    path.lambdas = lambda_grid(options.grid);
    const auto points = path.lambdas.size();
    const Eigen::Index m = problem.cols();
    const Eigen::Index n = problem.rows();
    path.betas = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points), m);
    path.bic_values.assign(points, std::numeric_limits<double>::infinity());
    path.computed.assign(points, false);
    path.sweeps.assign(points, 0);

    // A wide path ends in an interpolating fit with BIC -> -inf; stop once residual df would drop below model df.
    const bool wide = n > 2 && m >= n - 1;
    const Eigen::Index support_cap = wide ? n / 2 : m;
    SolverOptions solver_options = options.solver;
    if (solver_options.max_support == 0 && wide) solver_options.max_support = support_cap;
    CoordinateDescent solver(problem, solver_options);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
    bool saturated = false;
    double best = std::numeric_limits<double>::infinity();
    bool have_best = false;
    for (std::size_t i = 0; i < points; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        if (saturated) {
            path.betas.row(row) = beta.transpose();
            continue;
        }
        Eigen::VectorXd next;
        try {
            next = solver.solve(path.lambdas[i], beta);
        } catch (const SupportLimit&) {
            saturated = true;
        }
        if (saturated || count_nonzero(next) > support_cap) {
            saturated = true;
            path.betas.row(row) = beta.transpose();
            continue;
        }
        beta = std::move(next);
        path.betas.row(row) = beta.transpose();
        path.sweeps[i] = solver.last_sweeps();
        path.computed[i] = true;
        path.bic_values[i] = bic(problem, beta).value;
        if (!have_best || path.bic_values[i] < best) {
            best = path.bic_values[i];
            path.selected_index = static_cast<int>(i);
            have_best = true;
        }
    }
    return path;
}

Eigen::VectorXd unstandardize(const StandardizedProblem& problem, const Eigen::VectorXd& beta_tilde) {
    if (beta_tilde.size() != problem.cols()) throw UsageError("unstandardize: coefficient length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(problem.original_cols);
    for (Eigen::Index j = 0; j < problem.cols(); ++j)
        out(problem.kept[static_cast<std::size_t>(j)]) = beta_tilde(j) * problem.y_scale / problem.col_scales(j);
    return out;
}

Eigen::VectorXd expand_standardized(const StandardizedProblem& problem, const Eigen::VectorXd& beta_tilde) {
    if (beta_tilde.size() != problem.cols()) throw UsageError("expand_standardized: coefficient length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(problem.original_cols);
    for (Eigen::Index j = 0; j < problem.cols(); ++j) out(problem.kept[static_cast<std::size_t>(j)]) = beta_tilde(j);
    return out;
}

} // namespace hourlasso::lasso
