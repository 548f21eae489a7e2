#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hourlasso::models {

/// Names one regressor of an hourly model: a lagged price ("l@k", the
/// price at hour l, k days back) or a weekday dummy ("Sun".."Sat").
struct RegressorLabel {
    enum class Kind { Lag, Weekday, Intercept };

    Kind kind = Kind::Lag;
    int hour = 0;     // source hour for lags
    int lag = 1;      // day lag for lags
    int weekday = 0;  // 0 = Sunday

    static RegressorLabel lag_of(int hour, int lag) { return {Kind::Lag, hour, lag, 0}; }
    static RegressorLabel weekday_of(int k) { return {Kind::Weekday, 0, 0, k}; }
    static RegressorLabel intercept() { return {Kind::Intercept, 0, 0, 0}; }

    std::string render() const;
    static std::optional<RegressorLabel> parse(std::string_view text);

    friend bool operator==(const RegressorLabel&, const RegressorLabel&) = default;
};

std::vector<std::string> render_all(const std::vector<RegressorLabel>& labels);

/// Day lags admissible for target hour h and source hour l:
/// 1..same_hour_lags when h == l, 1..cross_hour_lags otherwise.
struct LagIndexSet {
    int same_hour_lags = 36;
    int cross_hour_lags = 8;

    int max_lag() const { return same_hour_lags > cross_hour_lags ? same_hour_lags : cross_hour_lags; }
    int count(int h, int l) const { return h == l ? same_hour_lags : cross_hour_lags; }
    std::vector<int> lags(int h, int l) const;
};

} // namespace hourlasso::models
