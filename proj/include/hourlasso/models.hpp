#pragma once

#include "hourlasso/dataio.hpp"
#include "hourlasso/estim.hpp"
#include "hourlasso/labels.hpp"
#include "hourlasso/lasso.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hourlasso::models {

enum class Family {
    Lasso,     // per-hour lasso over cross-hour lags
    DailyAR,   // 24 univariate AR(p) on daily series, Yule-Walker + AIC
    Expert,    // per-hour OLS on lags 1, 2, 7 (+ Sun/Mon/Sat)
    HourlyAR,  // one AR(p) on the flattened hourly series
    Pca,       // VAR on the leading principal-component scores
};

/// A model family plus its weekday variant. Names follow the report labels:
/// lasso, 24d.AR, exp.AR, AR(p), PCA / PCA<K>, each optionally with "-wd".
struct FamilySpec {
    Family family = Family::Lasso;
    bool weekdays = false;
    int pca_factors = 0;  // PCA only: fixed K, or 0 to choose K by backtest MAE

    std::string name() const;
    static FamilySpec parse(std::string_view name);

    friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

/// The ten standard variants (five families x {plain, -wd}); PCA chooses K.
std::vector<FamilySpec> standard_families();

struct ModelConfig {
    LagIndexSet lags;
    lasso::PathOptions lasso;
    int daily_ar_max_order = 50;
    int hourly_ar_max_order = 700;
    int var_max_order = 50;
};

/// Regression problem for one hour of the lasso model.
struct Design {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    std::vector<RegressorLabel> labels;
    Eigen::Index first_row = 0;  // panel row of y(0)
};

/// Rows are days max_lag..D-1 of `centered`. Columns: same-hour lags
/// 1..36, then every other hour in ascending order with lags 1..8, then
/// weekday dummies Sun..Sat when `weekdays` (one entry per panel row) is given.
Design build_design(const Eigen::MatrixXd& centered, int hour, const LagIndexSet& lags,
                    std::span<const int> weekdays = {});

struct LassoHour {
    std::vector<RegressorLabel> labels;
    Eigen::VectorXd coefficients;  // natural units (on centered prices)
    Eigen::VectorXd standardized;  // as estimated; zero for dropped columns
    double lambda = 0.0;
};
struct LassoState {
    std::vector<LassoHour> hours;
};

struct DailyArState {
    std::vector<estim::ARFit> hours;  // intercept = mean of the (weekday-adjusted) series
    Eigen::MatrixXd weekday_effects;  // 7 x 24 OLS weekday coefficients; empty without weekdays
};

struct ExpertHour {
    std::vector<RegressorLabel> labels;
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
};
struct ExpertState {
    std::vector<ExpertHour> hours;
};

struct HourlyArState {
    estim::ARFit fit;
    Eigen::VectorXd weekday_effects;  // 7 per-day constants; empty without weekdays
};

struct PcaState {
    estim::PCAFactorization factors;
    int factor_count = 0;
    estim::VARFit var;
    Eigen::MatrixXd weekday_effects;  // 7 x K; empty without weekdays
};

using ModelState = std::variant<LassoState, DailyArState, ExpertState, HourlyArState, PcaState>;

struct FittedForecaster {
    FamilySpec family;
    dataio::Date window_start{};
    dataio::Date window_end{};
    dataio::HourMeans mu;
    ModelState state;

    /// Number of trailing history days forecast_day reads.
    int required_history() const;
};

FittedForecaster fit_lasso_model(const dataio::PricePanel& window, bool with_weekdays, const ModelConfig& config = {});
FittedForecaster fit_24ar(const dataio::PricePanel& window, bool with_weekdays, const ModelConfig& config = {});
FittedForecaster fit_expert(const dataio::PricePanel& window, bool with_weekdays, const ModelConfig& config = {});
FittedForecaster fit_univariate_ar(const dataio::PricePanel& window, bool with_weekdays,
                                   const ModelConfig& config = {});
/// The VAR order bound is lowered to (D - 1) / K when the window is too short for it.
FittedForecaster fit_pca_var(const dataio::PricePanel& window, int factors, bool with_weekdays,
                             const ModelConfig& config = {});

/// Dispatches on the family; PCA requires a fixed K here.
FittedForecaster fit(const FamilySpec& family, const dataio::PricePanel& window, const ModelConfig& config = {});

/// Forecast of the 24 prices of the day after the last row of `history`.
Eigen::VectorXd forecast_day(const FittedForecaster& model, const dataio::PricePanel& history);

/// One-step in-sample errors (actual - forecast) for every window day with
/// enough history before it; rows are days required_history()..D-1.
Eigen::MatrixXd in_sample_errors(const FittedForecaster& model, const dataio::PricePanel& window);

} // namespace hourlasso::models
