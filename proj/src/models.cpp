#include "hourlasso/models.hpp"

#include "hourlasso/errors.hpp"

#include <algorithm>
#include <charconv>
#include <string>

namespace hourlasso::models {

using dataio::kHours;
using dataio::kWeekdays;
using dataio::PricePanel;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::string_view kWdSuffix = "-wd";

std::string base_name(const FamilySpec& spec) {
    switch (spec.family) {
    case Family::Lasso: return "lasso";
    case Family::DailyAR: return "24d.AR";
    case Family::Expert: return "exp.AR";
    case Family::HourlyAR: return "AR(p)";
    case Family::Pca: return spec.pca_factors > 0 ? "PCA" + std::to_string(spec.pca_factors) : "PCA";
    }
    return {};
}

std::span<const double> as_span(const VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

MatrixXd weekday_dummies(std::span<const int> weekdays) {
    MatrixXd w = MatrixXd::Zero(static_cast<Index>(weekdays.size()), kWeekdays);
    for (std::size_t i = 0; i < weekdays.size(); ++i) w(static_cast<Index>(i), weekdays[i]) = 1.0;
    return w;
}

// OLS of every column of `series` on the seven weekday dummies; 7 x cols.
MatrixXd weekday_ols(const MatrixXd& series, std::span<const int> weekdays) {
    const MatrixXd w = weekday_dummies(weekdays);
    MatrixXd psi(kWeekdays, series.cols());
    for (Index c = 0; c < series.cols(); ++c) {
        try {
            psi.col(c) = estim::ols(w, series.col(c));
        } catch (const NumericError& e) {
            throw NumericError(std::string("weekday regression needs every weekday in the window: ") + e.what());
        }
    }
    return psi;
}

int clamp_order(int p_max, Index n) {
    return static_cast<int>(std::min<Index>(p_max, n - 1));
}

FittedForecaster make(Family family, bool weekdays, const PricePanel& window) {
    if (window.empty()) throw DataError("empty estimation window");
    FittedForecaster m;
    m.family = {family, weekdays, 0};
    m.window_start = window.first_date();
    m.window_end = window.last_date();
    m.mu = dataio::demean(window).means;
    return m;
}

std::string hour_context(int h) { return "hour " + std::to_string(h) + ": "; }

template <class Error>
[[noreturn]] void rethrow_with(const std::string& prefix, const Error& e) {
    throw Error(prefix + e.what());
}

template <class Fn>
void per_hour(Fn&& fn) {
    for (int h = 0; h < kHours; ++h) {
        try {
            fn(h);
        } catch (const NumericError& e) {
            rethrow_with(hour_context(h), e);
        } catch (const DataError& e) {
            rethrow_with(hour_context(h), e);
        }
    }
}

} // namespace

std::string FamilySpec::name() const {
    return weekdays ? base_name(*this) + std::string(kWdSuffix) : base_name(*this);
}

FamilySpec FamilySpec::parse(std::string_view name) {
    FamilySpec spec;
    std::string_view base = name;
    if (base.size() > kWdSuffix.size() && base.ends_with(kWdSuffix)) {
        spec.weekdays = true;
        base.remove_suffix(kWdSuffix.size());
    }
    if (base == "lasso") spec.family = Family::Lasso;
    else if (base == "24d.AR") spec.family = Family::DailyAR;
    else if (base == "exp.AR") spec.family = Family::Expert;
    else if (base == "AR(p)" || base == "AR") spec.family = Family::HourlyAR;
    else if (base == "PCA" || base == "PCA*") spec.family = Family::Pca;
    else if (base.starts_with("PCA")) {
        const auto digits = base.substr(3);
        int k = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || k < 1 || k > kHours)
            throw UsageError("bad PCA factor count in family name: " + std::string(name));
        spec.family = Family::Pca;
        spec.pca_factors = k;
    } else {
        throw UsageError("unknown model family: " + std::string(name));
    }
    return spec;
}

std::vector<FamilySpec> standard_families() {
    std::vector<FamilySpec> out;
    for (Family f : {Family::Lasso, Family::DailyAR, Family::Expert, Family::HourlyAR, Family::Pca})
        for (bool wd : {false, true}) out.push_back({f, wd, 0});
    return out;
}

Design build_design(const MatrixXd& centered, int hour, const LagIndexSet& lags, std::span<const int> weekdays) {
    if (hour < 0 || hour >= kHours) throw UsageError("hour out of range: " + std::to_string(hour));
    if (centered.cols() != kHours) throw DataError("design needs 24 hourly columns");
    const Index d = centered.rows();
    const int max_lag = lags.max_lag();
    if (d <= max_lag)
        throw DataError("window of " + std::to_string(d) + " days is too short for " + std::to_string(max_lag) +
                        " day lags");
    if (!weekdays.empty() && static_cast<Index>(weekdays.size()) != d)
        throw UsageError("weekday list length differs from the panel");

    Design out;
    out.first_row = max_lag;
    for (int k : lags.lags(hour, hour)) out.labels.push_back(RegressorLabel::lag_of(hour, k));
    for (int l = 0; l < kHours; ++l) {
        if (l == hour) continue;
        for (int k : lags.lags(hour, l)) out.labels.push_back(RegressorLabel::lag_of(l, k));
    }
    if (!weekdays.empty())
        for (int k = 0; k < kWeekdays; ++k) out.labels.push_back(RegressorLabel::weekday_of(k));

    const Index n = d - max_lag;
    out.y = centered.col(hour).tail(n);
    out.x.resize(n, static_cast<Index>(out.labels.size()));
    for (std::size_t j = 0; j < out.labels.size(); ++j) {
        const auto& lab = out.labels[j];
        const auto col = static_cast<Index>(j);
        if (lab.kind == RegressorLabel::Kind::Lag) {
            out.x.col(col) = centered.col(lab.hour).segment(max_lag - lab.lag, n);
        } else {
            for (Index r = 0; r < n; ++r)
                out.x(r, col) = weekdays[static_cast<std::size_t>(max_lag + r)] == lab.weekday ? 1.0 : 0.0;
        }
    }
    return out;
}

int FittedForecaster::required_history() const {
    return std::visit(
        [](const auto& s) -> int {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LassoState>) {
                int need = 0;
                for (const auto& hour : s.hours)
                    for (Index j = 0; j < hour.coefficients.size(); ++j)
                        if (hour.labels[static_cast<std::size_t>(j)].kind == RegressorLabel::Kind::Lag)
                            need = std::max(need, hour.labels[static_cast<std::size_t>(j)].lag);
                return need;
            } else if constexpr (std::is_same_v<S, DailyArState>) {
                int need = 0;
                for (const auto& f : s.hours) need = std::max(need, f.order);
                return need;
            } else if constexpr (std::is_same_v<S, ExpertState>) {
                return 7;
            } else if constexpr (std::is_same_v<S, HourlyArState>) {
                return (s.fit.order + kHours - 1) / kHours;
            } else {
                return s.var.order;
            }
        },
        state);
}

FittedForecaster fit_lasso_model(const PricePanel& window, bool with_weekdays, const ModelConfig& config) {
    FittedForecaster m = make(Family::Lasso, with_weekdays, window);
    const MatrixXd centered = window.prices().rowwise() - m.mu.mu.transpose();
    const std::vector<int> wd = with_weekdays ? window.weekdays() : std::vector<int>{};

    LassoState state;
    state.hours.resize(kHours);
    per_hour([&](int h) {
        Design design = build_design(centered, h, config.lags, wd);
        const auto problem = lasso::standardize(design.x, design.y, render_all(design.labels));
        const auto path = lasso::fit_lasso_path(problem, config.lasso);
        const VectorXd beta = path.selected();
        auto& out = state.hours[static_cast<std::size_t>(h)];
        out.labels = std::move(design.labels);
        out.coefficients = lasso::unstandardize(problem, beta);
        out.standardized = lasso::expand_standardized(problem, beta);
        out.lambda = path.selected_lambda();
    });
    m.state = std::move(state);
    return m;
}

FittedForecaster fit_24ar(const PricePanel& window, bool with_weekdays, const ModelConfig& config) {
    FittedForecaster m = make(Family::DailyAR, with_weekdays, window);
    MatrixXd series = window.prices();
    DailyArState state;
    if (with_weekdays) {
        const auto wd = window.weekdays();
        state.weekday_effects = weekday_ols(series, wd);
        for (Index d = 0; d < series.rows(); ++d)
            series.row(d) -= state.weekday_effects.row(wd[static_cast<std::size_t>(d)]);
    }
    const int p_max = clamp_order(config.daily_ar_max_order, series.rows());
    state.hours.resize(kHours);
    per_hour([&](int h) {
        const VectorXd col = series.col(h);
        state.hours[static_cast<std::size_t>(h)] = estim::fit_ar_aic(as_span(col), p_max);
    });
    m.state = std::move(state);
    return m;
}

FittedForecaster fit_expert(const PricePanel& window, bool with_weekdays, const ModelConfig&) {
    FittedForecaster m = make(Family::Expert, with_weekdays, window);
    static constexpr int kLags[] = {1, 2, 7};
    static constexpr int kDummies[] = {0, 1, 6};
    const Index d = window.days();
    const Index n = d - 7;
    const Index cols = 4 + (with_weekdays ? 3 : 0);
    if (n <= cols) throw DataError("window of " + std::to_string(d) + " days is too short for the expert model");

    const auto wd = window.weekdays();
    ExpertState state;
    state.hours.resize(kHours);
    per_hour([&](int h) {
        MatrixXd x(n, cols);
        x.col(0).setOnes();
        for (int j = 0; j < 3; ++j) x.col(1 + j) = window.prices().col(h).segment(7 - kLags[j], n);
        if (with_weekdays)
            for (int j = 0; j < 3; ++j)
                for (Index r = 0; r < n; ++r)
                    x(r, 4 + j) = wd[static_cast<std::size_t>(7 + r)] == kDummies[j] ? 1.0 : 0.0;
        const VectorXd beta = estim::ols(x, window.prices().col(h).tail(n));

        auto& out = state.hours[static_cast<std::size_t>(h)];
        out.intercept = beta(0);
        out.coefficients = beta.tail(cols - 1);
        for (int k : kLags) out.labels.push_back(RegressorLabel::lag_of(h, k));
        if (with_weekdays)
            for (int k : kDummies) out.labels.push_back(RegressorLabel::weekday_of(k));
    });
    m.state = std::move(state);
    return m;
}

FittedForecaster fit_univariate_ar(const PricePanel& window, bool with_weekdays, const ModelConfig& config) {
    FittedForecaster m = make(Family::HourlyAR, with_weekdays, window);
    const Index d = window.days();
    // Row-major flattening: t = 24 d + h.
    const MatrixXd transposed = window.prices().transpose();
    VectorXd series = Eigen::Map<const VectorXd>(transposed.data(), d * kHours);

    HourlyArState state;
    if (with_weekdays) {
        const auto wd = window.weekdays();
        std::vector<int> per_hour_wd(static_cast<std::size_t>(d * kHours));
        for (Index t = 0; t < d * kHours; ++t)
            per_hour_wd[static_cast<std::size_t>(t)] = wd[static_cast<std::size_t>(t / kHours)];
        state.weekday_effects = weekday_ols(series, per_hour_wd).col(0);
        for (Index t = 0; t < series.size(); ++t)
            series(t) -= state.weekday_effects(per_hour_wd[static_cast<std::size_t>(t)]);
    }
    state.fit = estim::fit_ar_aic(as_span(series), clamp_order(config.hourly_ar_max_order, series.size()));
    m.state = std::move(state);
    return m;
}

FittedForecaster fit_pca_var(const PricePanel& window, int factors, bool with_weekdays, const ModelConfig& config) {
    if (factors < 1 || factors > kHours)
        throw UsageError("PCA factor count must be in 1..24, got " + std::to_string(factors));
    FittedForecaster m = make(Family::Pca, with_weekdays, window);
    m.family.pca_factors = factors;

    PcaState state;
    state.factor_count = factors;
    state.factors = estim::pca_fit(window.prices());
    MatrixXd scores = estim::pca_scores(state.factors, window.prices(), factors);
    if (with_weekdays) {
        const auto wd = window.weekdays();
        state.weekday_effects = weekday_ols(scores, wd);
        for (Index d = 0; d < scores.rows(); ++d)
            scores.row(d) -= state.weekday_effects.row(wd[static_cast<std::size_t>(d)]);
    }
    const int p_max = std::min<int>(config.var_max_order, static_cast<int>((window.days() - 1) / factors));
    if (p_max < 0) throw DataError("window too short for the VAR");
    state.var = estim::multivar_yule_walker(scores, p_max);
    m.state = std::move(state);
    return m;
}

FittedForecaster fit(const FamilySpec& family, const PricePanel& window, const ModelConfig& config) {
    switch (family.family) {
    case Family::Lasso: return fit_lasso_model(window, family.weekdays, config);
    case Family::DailyAR: return fit_24ar(window, family.weekdays, config);
    case Family::Expert: return fit_expert(window, family.weekdays, config);
    case Family::HourlyAR: return fit_univariate_ar(window, family.weekdays, config);
    case Family::Pca:
        if (family.pca_factors <= 0) throw UsageError("PCA needs a fixed factor count here");
        return fit_pca_var(window, family.pca_factors, family.weekdays, config);
    }
    throw UsageError("unknown model family");
}

namespace {

struct ForecastContext {
    const PricePanel& history;
    Index last;        // row of day d
    int next_weekday;  // weekday of day d + 1

    double price(int days_back, int hour) const { return history(last - days_back + 1, hour); }
    int weekday_back(int days_back) const { return history.weekday(last - days_back + 1); }
};

VectorXd forecast(const FittedForecaster& m, const LassoState& s, const ForecastContext& c) {
    VectorXd out = m.mu.mu;
    for (int h = 0; h < kHours; ++h) {
        const auto& hour = s.hours[static_cast<std::size_t>(h)];
        for (Index j = 0; j < hour.coefficients.size(); ++j) {
            const double b = hour.coefficients(j);
            if (b == 0.0) continue;
            const auto& lab = hour.labels[static_cast<std::size_t>(j)];
            if (lab.kind == RegressorLabel::Kind::Lag)
                out(h) += b * (c.price(lab.lag, lab.hour) - m.mu.mu(lab.hour));
            else if (lab.kind == RegressorLabel::Kind::Weekday && lab.weekday == c.next_weekday)
                out(h) += b;
        }
    }
    return out;
}

VectorXd forecast(const FittedForecaster&, const DailyArState& s, const ForecastContext& c) {
    const bool wd = s.weekday_effects.size() > 0;
    VectorXd out(kHours);
    for (int h = 0; h < kHours; ++h) {
        const auto& f = s.hours[static_cast<std::size_t>(h)];
        double value = f.intercept + (wd ? s.weekday_effects(c.next_weekday, h) : 0.0);
        for (int k = 1; k <= f.order; ++k) {
            const double adj = wd ? s.weekday_effects(c.weekday_back(k), h) : 0.0;
            value += f.phi(k - 1) * (c.price(k, h) - adj - f.intercept);
        }
        out(h) = value;
    }
    return out;
}

VectorXd forecast(const FittedForecaster&, const ExpertState& s, const ForecastContext& c) {
    VectorXd out(kHours);
    for (int h = 0; h < kHours; ++h) {
        const auto& e = s.hours[static_cast<std::size_t>(h)];
        double value = e.intercept;
        for (Index j = 0; j < e.coefficients.size(); ++j) {
            const auto& lab = e.labels[static_cast<std::size_t>(j)];
            if (lab.kind == RegressorLabel::Kind::Lag)
                value += e.coefficients(j) * c.price(lab.lag, lab.hour);
            else if (lab.weekday == c.next_weekday)
                value += e.coefficients(j);
        }
        out(h) = value;
    }
    return out;
}

VectorXd forecast(const FittedForecaster&, const HourlyArState& s, const ForecastContext& c) {
    const auto& f = s.fit;
    const bool wd = s.weekday_effects.size() > 0;
    const int p = f.order;
    // dev holds p past deviations followed by the 24 predicted ones.
    std::vector<double> dev(static_cast<std::size_t>(p + kHours), 0.0);
    for (int i = 0; i < p; ++i) {
        const int back = p - i;  // hours before the first forecast hour
        const int days_back = (back - 1) / kHours + 1;
        const int hour = kHours - 1 - (back - 1) % kHours;
        const double adj = wd ? s.weekday_effects(c.weekday_back(days_back)) : 0.0;
        dev[static_cast<std::size_t>(i)] = c.price(days_back, hour) - adj - f.intercept;
    }
    const double level = f.intercept + (wd ? s.weekday_effects(c.next_weekday) : 0.0);
    VectorXd out(kHours);
    for (int h = 0; h < kHours; ++h) {
        const std::size_t t = static_cast<std::size_t>(p + h);
        double value = 0.0;
        for (int k = 1; k <= p; ++k) value += f.phi(k - 1) * dev[t - static_cast<std::size_t>(k)];
        dev[t] = value;
        out(h) = level + value;
    }
    return out;
}

VectorXd forecast(const FittedForecaster&, const PcaState& s, const ForecastContext& c) {
    const int k = s.factor_count;
    const bool wd = s.weekday_effects.size() > 0;
    const auto& var = s.var;
    VectorXd next = var.intercept;
    if (wd) next += s.weekday_effects.row(c.next_weekday).transpose();
    if (var.order > 0) {
        const Index rows = var.order;
        const MatrixXd recent = c.history.prices().middleRows(c.last - rows + 1, rows);
        const MatrixXd scores = estim::pca_scores(s.factors, recent, k);
        for (int lag = 1; lag <= var.order; ++lag) {
            VectorXd dev = scores.row(rows - lag).transpose() - var.intercept;
            if (wd) dev -= s.weekday_effects.row(c.weekday_back(lag)).transpose();
            next += var.phi[static_cast<std::size_t>(lag - 1)] * dev;
        }
    }
    return estim::pca_reconstruct(s.factors, next.transpose()).row(0).transpose();
}

} // namespace

VectorXd forecast_day(const FittedForecaster& model, const PricePanel& history) {
    const int need = std::max(model.required_history(), 1);
    if (history.days() < need)
        throw DataError("insufficient history for " + model.family.name() + ": need " + std::to_string(need) +
                        " days, got " + std::to_string(history.days()));
    const ForecastContext ctx{history, history.days() - 1, dataio::weekday_of(dataio::add_days(history.last_date(), 1))};
    VectorXd out = std::visit([&](const auto& s) { return forecast(model, s, ctx); }, model.state);
    if (!out.allFinite()) throw NumericError("non-finite forecast from " + model.family.name());
    return out;
}

MatrixXd in_sample_errors(const FittedForecaster& model, const PricePanel& window) {
    const Index need = std::max(model.required_history(), 1);
    if (window.days() <= need) return MatrixXd(0, kHours);
    MatrixXd errors(window.days() - need, kHours);
    for (Index d = need; d < window.days(); ++d)
        errors.row(d - need) =
            window.prices().row(d) - forecast_day(model, window.slice(d - need, need)).transpose();
    return errors;
}

} // namespace hourlasso::models
