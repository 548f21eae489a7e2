#pragma once

#include "hourlasso/dataio.hpp"
#include "hourlasso/models.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hourlasso::backtest {

struct BacktestConfig {
    int window = 730;
    std::vector<models::FamilySpec> families = models::standard_families();
    int bootstrap = 10000;
    std::uint64_t seed = 1;
    int refit_every = 1;  // days between refits; 1 refits every day
    int threads = 1;
    models::ModelConfig model;
    int pca_k_min = 2;
    int pca_k_max = 12;

    /// Throws UsageError when a bound is out of range.
    void validate() const;
};

/// Forecasts and realized prices for the N out-of-sample days.
struct ForecastMatrix {
    std::vector<dataio::Date> dates;
    Eigen::MatrixXd forecast;  // N x 24
    Eigen::MatrixXd actual;    // N x 24

    Eigen::Index days() const { return forecast.rows(); }
    Eigen::MatrixXd errors() const { return actual - forecast; }
};

double mae(const ForecastMatrix& fm);
double rmse(const ForecastMatrix& fm);
Eigen::VectorXd mae_h(const ForecastMatrix& fm);
Eigen::VectorXd rmse_h(const ForecastMatrix& fm);

/// The metrics above evaluated on an error matrix (one row per day, any width).
double mae(const Eigen::MatrixXd& errors);
double rmse(const Eigen::MatrixXd& errors);
Eigen::VectorXd mae_h(const Eigen::MatrixXd& errors);
Eigen::VectorXd rmse_h(const Eigen::MatrixXd& errors);

/// Called with (forecast days done, total) as work completes; calls are serialized.
using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Rolling window: out-of-sample day n (0-based) is forecast by a model
/// fitted on panel rows [n, n + D). With refit_every r the model fitted at
/// the start of each block of r days serves the whole block. Every PCA spec
/// needs a fixed K. Results are independent of the thread count.
std::vector<ForecastMatrix> rolling_forecasts(const dataio::PricePanel& panel,
                                              std::span<const models::FamilySpec> families,
                                              const BacktestConfig& config, const ProgressFn& progress = {});

ForecastMatrix rolling_backtest(const dataio::PricePanel& panel, const models::FamilySpec& family,
                                const BacktestConfig& config, const ProgressFn& progress = {});

struct PcaSelection {
    int k = 0;
    std::vector<int> candidates;
    std::vector<double> mae_by_k;
    ForecastMatrix forecasts;  // of the selected K
};

/// Backtests K = pca_k_min..pca_k_max and keeps the smallest overall MAE (ties to smaller K).
PcaSelection select_pca_k(const dataio::PricePanel& panel, bool with_weekdays, const BacktestConfig& config,
                          const ProgressFn& progress = {});

using Statistic = std::function<double(const Eigen::MatrixXd& errors)>;

/// Sample sd (denominator B - 1; 0 when B == 1) of `statistic` over B
/// bootstrap error matrices, each drawing N day rows with replacement.
/// Replicate b uses its own stream seeded with derive_seed(seed, b).
double bootstrap_sd(const ForecastMatrix& fm, const Statistic& statistic, int replicates, std::uint64_t seed,
                    int threads = 1);

struct MetricSds {
    double mae = 0.0;
    double rmse = 0.0;
    Eigen::VectorXd mae_h;
    Eigen::VectorXd rmse_h;
};

/// bootstrap_sd for all report statistics from one set of resamples.
MetricSds bootstrap_sds(const ForecastMatrix& fm, int replicates, std::uint64_t seed, int threads = 1);

struct FamilyResult {
    std::string name;             // as requested, e.g. "PCA-wd"
    models::FamilySpec family;    // resolved (PCA with its chosen K)
    ForecastMatrix forecasts;
    double mae = 0.0;
    double rmse = 0.0;
    Eigen::VectorXd mae_h;
    Eigen::VectorXd rmse_h;
    MetricSds sd;
    bool best_mae = false;
    bool best_rmse = false;
    bool not_worse_mae = false;
    bool not_worse_rmse = false;
    std::vector<int> pca_candidates;
    std::vector<double> pca_mae_by_k;
};

struct BacktestReport {
    std::string market;
    BacktestConfig config;
    std::vector<FamilyResult> families;
};

/// Per metric: best = smallest value (first on ties); a family is not
/// significantly worse iff value <= best + 2 sd(best).
void significance_flags(BacktestReport& report);

/// Forecasts for every configured family, metrics, bootstrap sds and flags.
BacktestReport run_backtest(const dataio::PricePanel& panel, const BacktestConfig& config,
                            std::string market = "", const ProgressFn& progress = {});

nlohmann::json report_json(const BacktestReport& report);

/// Plain-text MAE/RMSE table; best values as **x**, other values within
/// the 2-sigma range of the best as x*.
void write_summary(std::ostream& out, const BacktestReport& report);

/// `date,family,h00..h23`, one row per family and out-of-sample day.
void write_forecast_csv(std::ostream& out, const BacktestReport& report);

} // namespace hourlasso::backtest
