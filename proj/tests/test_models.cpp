#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hourlasso/errors.hpp"
#include "hourlasso/estim.hpp"
#include "hourlasso/model_io.hpp"
#include "hourlasso/models.hpp"
#include "hourlasso/synth.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"

#include <algorithm>
#include <cmath>

using namespace hourlasso;
using namespace hourlasso::models;
using backtest::synth_panel;
using dataio::PricePanel;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const dataio::Date kStart = dataio::parse_date("2013-01-06");  // a Sunday

PricePanel panel_of(const MatrixXd& prices) { return {kStart, prices}; }

// Every hour an independent AR(1) series with coefficient phi around `mean`.
PricePanel independent_ar1(double phi, int days, std::uint64_t seed, double mean = 40.0) {
    MatrixXd p(days, 24);
    for (int h = 0; h < 24; ++h) {
        const auto x = oracle::simulate_ar({phi}, days, derive_seed(seed, static_cast<std::uint64_t>(h)));
        for (int d = 0; d < days; ++d) p(d, h) = mean + x[static_cast<std::size_t>(d)];
    }
    return panel_of(p);
}

PricePanel hourly_series_panel(const std::vector<double>& x, double mean) {
    const Index days = static_cast<Index>(x.size()) / 24;
    MatrixXd p(days, 24);
    for (Index d = 0; d < days; ++d)
        for (int h = 0; h < 24; ++h) p(d, h) = mean + x[static_cast<std::size_t>(24 * d + h)];
    return panel_of(p);
}

double rss(const MatrixXd& x, const VectorXd& y) { return (y - x * estim::ols(x, y)).squaredNorm(); }

int nonzeros(const LassoHour& hour) { return static_cast<int>((hour.coefficients.array() != 0.0).count()); }

FittedForecaster zero_lasso(const std::vector<RegressorLabel>& labels) {
    FittedForecaster m;
    m.family = {Family::Lasso, true, 0};
    m.mu.mu = VectorXd::LinSpaced(24, 30.0, 53.0);
    LassoState s;
    for (int h = 0; h < 24; ++h) {
        const auto n = static_cast<Index>(labels.size());
        s.hours.push_back({labels, VectorXd::Zero(n), VectorXd::Zero(n), 0.0});
    }
    m.state = s;
    return m;
}

} // namespace

TEST_CASE("regressor labels render and parse") {
    CHECK(RegressorLabel::lag_of(23, 1).render() == "23@1");
    CHECK(RegressorLabel::lag_of(0, 36).render() == "0@36");
    CHECK(RegressorLabel::weekday_of(0).render() == "Sun");
    CHECK(RegressorLabel::weekday_of(6).render() == "Sat");
    for (int h = 0; h < 24; ++h)
        for (int k = 1; k <= 36; ++k) {
            const auto lab = RegressorLabel::lag_of(h, k);
            CHECK(RegressorLabel::parse(lab.render()) == lab);
        }
    for (int k = 0; k < 7; ++k)
        CHECK(RegressorLabel::parse(RegressorLabel::weekday_of(k).render()) == RegressorLabel::weekday_of(k));
    CHECK_FALSE(RegressorLabel::parse("24@1"));
    CHECK_FALSE(RegressorLabel::parse("3@0"));
    CHECK_FALSE(RegressorLabel::parse("Sunday"));
}

TEST_CASE("lag index set") {
    const LagIndexSet idx;
    CHECK(idx.lags(5, 5).size() == 36);
    CHECK(idx.lags(5, 6).size() == 8);
    CHECK(idx.lags(5, 6).front() == 1);
    CHECK(idx.lags(5, 5).back() == 36);
    CHECK(idx.max_lag() == 36);
}

TEST_CASE("family names") {
    const auto all = standard_families();
    REQUIRE(all.size() == 10);
    std::vector<std::string> names;
    for (const auto& f : all) {
        names.push_back(f.name());
        CHECK(FamilySpec::parse(f.name()) == f);
    }
    CHECK(names == std::vector<std::string>{"lasso", "lasso-wd", "24d.AR", "24d.AR-wd", "exp.AR", "exp.AR-wd",
                                            "AR(p)", "AR(p)-wd", "PCA", "PCA-wd"});
    CHECK(FamilySpec::parse("AR") == FamilySpec::parse("AR(p)"));
    CHECK(FamilySpec::parse("PCA*-wd") == FamilySpec::parse("PCA-wd"));
    const auto fixed = FamilySpec::parse("PCA7-wd");
    CHECK(fixed.family == Family::Pca);
    CHECK(fixed.pca_factors == 7);
    CHECK(fixed.weekdays);
    CHECK(fixed.name() == "PCA7-wd");
    CHECK_THROWS_AS(FamilySpec::parse("ridge"), UsageError);
    CHECK_THROWS_AS(FamilySpec::parse("lasso-wd-wd"), UsageError);
    CHECK_THROWS_AS(FamilySpec::parse("PCAx"), UsageError);
}

TEST_CASE("build_design layout") {
    Rng rng(3);
    const int days = 60;
    const MatrixXd y = oracle::random_matrix(rng, days, 24);
    const auto panel = panel_of(y);
    const auto wd = panel.weekdays();
    const LagIndexSet idx;

    const Design plain = build_design(y, 7, idx);
    CHECK(plain.x.cols() == 220);
    CHECK(plain.x.rows() == days - 36);
    CHECK(plain.first_row == 36);
    const Design with_wd = build_design(y, 7, idx, wd);
    CHECK(with_wd.x.cols() == 227);

    // Column order: own lags 1..36, other hours ascending with lags 1..8, Sun..Sat.
    std::vector<RegressorLabel> expected;
    for (int k = 1; k <= 36; ++k) expected.push_back(RegressorLabel::lag_of(7, k));
    for (int l = 0; l < 24; ++l)
        if (l != 7)
            for (int k = 1; k <= 8; ++k) expected.push_back(RegressorLabel::lag_of(l, k));
    for (int k = 0; k < 7; ++k) expected.push_back(RegressorLabel::weekday_of(k));
    CHECK(with_wd.labels == expected);

    for (Index j = 0; j < with_wd.x.cols(); ++j) {
        const auto& lab = with_wd.labels[static_cast<std::size_t>(j)];
        for (Index r = 0; r < with_wd.x.rows(); ++r) {
            const Index d = with_wd.first_row + r;
            const double want = lab.kind == RegressorLabel::Kind::Lag
                                    ? y(d - lab.lag, lab.hour)
                                    : (wd[static_cast<std::size_t>(d)] == lab.weekday ? 1.0 : 0.0);
            REQUIRE(with_wd.x(r, j) == want);
        }
    }
    CHECK(with_wd.y == y.col(7).tail(days - 36));

    const Design h0 = build_design(y, 0, idx);
    const auto it = std::find(h0.labels.begin(), h0.labels.end(), RegressorLabel::lag_of(23, 1));
    REQUIRE(it != h0.labels.end());
    const Index col = it - h0.labels.begin();
    for (Index r = 0; r < h0.x.rows(); ++r) CHECK(h0.x(r, col) == y(36 + r - 1, 23));

    CHECK_THROWS_AS(build_design(y.topRows(36), 0, idx), DataError);
    CHECK_NOTHROW(build_design(y.topRows(37), 0, idx));
}

TEST_CASE("lasso model recovers sparse cross-hour dynamics") {
    double recall = 0.0;
    const int seeds = 2;
    for (int s = 0; s < seeds; ++s) {
        const auto truth = scenario::sparse_dynamics(100 + s, 400, 0.01);
        const auto model = fit_lasso_model(synth_panel(truth.spec, 200 + s), false);
        const auto& state = std::get<LassoState>(model.state);
        for (int h = 0; h < 24; ++h) {
            const auto& hour = state.hours[static_cast<std::size_t>(h)];
            int hit = 0;
            for (const auto& lab : truth.support[static_cast<std::size_t>(h)]) {
                const auto at = std::find(hour.labels.begin(), hour.labels.end(), lab) - hour.labels.begin();
                if (hour.coefficients(at) != 0.0) ++hit;
            }
            recall += hit;
        }
    }
    CHECK(recall / (seeds * 24.0) >= 4.0);
}

TEST_CASE("lasso model on white noise stays sparse") {
    const auto model = fit_lasso_model(synth_panel(scenario::white_noise(400), 5), false);
    double total = 0.0;
    for (const auto& hour : std::get<LassoState>(model.state).hours) total += nonzeros(hour);
    CHECK(total / 24.0 <= 2.0);
}

TEST_CASE("lasso weekday dummies absorb a Sunday effect") {
    auto spec = scenario::white_noise(300);
    spec.phi = {0.4 * MatrixXd::Identity(24, 24)};
    spec.weekday_offsets = MatrixXd::Zero(7, 24);
    spec.weekday_offsets.row(0).setConstant(-15.0);
    const auto panel = synth_panel(spec, 8);
    const auto plain = fit_lasso_model(panel, false);
    const auto wd = fit_lasso_model(panel, true);
    const MatrixXd e_plain = in_sample_errors(plain, panel);
    const MatrixXd e_wd = in_sample_errors(wd, panel);
    const Index rows = std::min(e_plain.rows(), e_wd.rows());
    CHECK(e_plain.bottomRows(rows).squaredNorm() > e_wd.bottomRows(rows).squaredNorm());
}

TEST_CASE("lasso model stores finite coefficients aligned with labels") {
    const auto panel = synth_panel(backtest::synth_preset("cross-hour", 200), 4);
    const auto model = fit_lasso_model(panel, true);
    for (const auto& hour : std::get<LassoState>(model.state).hours) {
        REQUIRE(static_cast<std::size_t>(hour.coefficients.size()) == hour.labels.size());
        REQUIRE(hour.standardized.size() == hour.coefficients.size());
        CHECK(hour.coefficients.allFinite());
        for (Index j = 0; j < hour.coefficients.size(); ++j) {
            CHECK((hour.coefficients(j) == 0.0) == (hour.standardized(j) == 0.0));
            const auto& lab = hour.labels[static_cast<std::size_t>(j)];
            CHECK(RegressorLabel::parse(lab.render()) == lab);
        }
    }
    CHECK(model.window_start == panel.first_date());
    CHECK(model.window_end == panel.last_date());
}

TEST_CASE("forecast_day from hand-built models") {
    Rng rng(2);
    MatrixXd prices = 40.0 + oracle::random_matrix(rng, 40, 24).array();
    const auto history = panel_of(prices);
    const int next_wd = dataio::weekday_of(dataio::add_days(history.last_date(), 1));

    SUBCASE("all coefficients zero give the hour means plus the weekday term") {
        auto m = zero_lasso({RegressorLabel::lag_of(3, 1), RegressorLabel::weekday_of(next_wd)});
        CHECK(forecast_day(m, history) == m.mu.mu);
        for (auto& hour : std::get<LassoState>(m.state).hours) hour.coefficients(1) = 2.5;
        const VectorXd f = forecast_day(m, history);
        CHECK((f - m.mu.mu).cwiseAbs().maxCoeff() == doctest::Approx(2.5));
        CHECK((f - m.mu.mu).cwiseAbs().minCoeff() == doctest::Approx(2.5));
    }
    SUBCASE("single cross-hour coefficient") {
        auto m = zero_lasso({RegressorLabel::lag_of(23, 1)});
        std::get<LassoState>(m.state).hours[0].coefficients(0) = 1.0;
        const VectorXd f = forecast_day(m, history);
        CHECK(f(0) == doctest::Approx(m.mu.mu(0) + prices(39, 23) - m.mu.mu(23)).epsilon(1e-14));
        CHECK(f.tail(23) == m.mu.mu.tail(23));
    }
    SUBCASE("univariate AR(1) recursion halves the deviation each hour") {
        FittedForecaster m;
        m.family = {Family::HourlyAR, false, 0};
        m.mu.mu = VectorXd::Constant(24, 40.0);
        HourlyArState s;
        s.fit.order = 1;
        s.fit.phi = VectorXd::Constant(1, 0.5);
        s.fit.intercept = 40.0;
        m.state = s;
        MatrixXd one = MatrixXd::Constant(1, 24, 40.0);
        one(0, 23) = 48.0;
        const VectorXd f = forecast_day(m, panel_of(one));
        for (int h = 0; h < 24; ++h) CHECK(f(h) - 40.0 == doctest::Approx(8.0 * std::pow(0.5, h + 1)));
    }
    SUBCASE("hourly flattening t = 24 d + j") {
        // Lag 43 from hour 0 of day 4 reaches hour 5 of day 2.
        FittedForecaster m;
        m.family = {Family::HourlyAR, false, 0};
        HourlyArState s;
        s.fit.order = 43;
        s.fit.phi = VectorXd::Zero(43);
        s.fit.phi(42) = 1.0;
        m.state = s;
        MatrixXd four(4, 24);
        for (int d = 0; d < 4; ++d)
            for (int h = 0; h < 24; ++h) four(d, h) = 100.0 * d + h;
        const VectorXd f = forecast_day(m, panel_of(four));
        CHECK(f(0) == four(2, 5));
        CHECK(f(1) == four(2, 6));
    }
    SUBCASE("insufficient history") {
        auto m = zero_lasso({RegressorLabel::lag_of(4, 30)});
        CHECK(m.required_history() == 30);
        CHECK_THROWS_AS(forecast_day(m, history.slice(0, 29)), DataError);
        CHECK_NOTHROW(forecast_day(m, history.slice(0, 30)));
    }
}

TEST_CASE("24d.AR recovers independent AR(1) hours") {
    const auto model = fit_24ar(independent_ar1(0.7, 2000, 11), false);
    const auto& state = std::get<DailyArState>(model.state);
    for (const auto& f : state.hours) {
        REQUIRE(f.order >= 1);
        CHECK(std::abs(f.phi(0) - 0.7) <= 0.05);
        CHECK(estim::companion_spectral_radius(f.phi) < 1.0);
    }
}

// AIC with p_max = 50 keeps order 0 on white noise only about 70% of the
// time, so "most hours" rather than 20 of 24 is what the criterion delivers.
TEST_CASE("24d.AR on white noise selects order 0 for most hours") {
    int zero = 0;
    for (std::uint64_t seed : {12, 13, 14, 15}) {
        const auto model = fit_24ar(synth_panel(scenario::white_noise(1000), seed), false);
        for (const auto& f : std::get<DailyArState>(model.state).hours) zero += f.order == 0;
    }
    CHECK(zero >= 0.55 * 96);
}

TEST_CASE("24d.AR-wd two-step recovers weekday means") {
    const int days = 700;
    Rng rng(13);
    const MatrixXd psi = 30.0 + 10.0 * oracle::random_matrix(rng, 7, 24).array();
    auto spec = scenario::white_noise(days, 0.0, 1.0);
    spec.start = kStart;
    spec.weekday_offsets = psi;
    const auto panel = synth_panel(spec, 14);
    const auto model = fit_24ar(panel, true);
    const auto& state = std::get<DailyArState>(model.state);
    int zero = 0;
    for (const auto& f : state.hours) zero += f.order == 0;
    CHECK(zero >= 12);

    const double se = 1.0 / std::sqrt(days / 7.0);
    int inside = 0;
    for (int k = 0; k < 7; ++k)
        for (int h = 0; h < 24; ++h) inside += std::abs(state.weekday_effects(k, h) - psi(k, h)) <= 2.0 * se;
    CHECK(inside >= 0.9 * 168);
}

TEST_CASE("24d.AR forecasts converge to the weekday-adjusted mean") {
    for (bool wd : {false, true}) {
        auto spec = backtest::synth_preset("weekday", 400);
        if (!wd) spec.weekday_offsets.resize(0, 0);
        const auto panel = synth_panel(spec, 15);
        const auto model = fit_24ar(panel, wd);
        const auto& state = std::get<DailyArState>(model.state);
        MatrixXd path = panel.prices();
        for (int step = 0; step < 1000; ++step) {
            const PricePanel h(panel.first_date(), path);
            path.conservativeResize(path.rows() + 1, Eigen::NoChange);
            path.row(path.rows() - 1) = forecast_day(model, h).transpose();
        }
        const PricePanel done(panel.first_date(), path);
        const Index last = done.days() - 1;
        for (int h = 0; h < 24; ++h) {
            double level = state.hours[static_cast<std::size_t>(h)].intercept;
            if (wd) level += state.weekday_effects(done.weekday(last), h);
            CHECK(done(last, h) == doctest::Approx(level).epsilon(1e-6));
        }
    }
}

TEST_CASE("expert model recovers its own dynamics") {
    const int days = 2000;
    MatrixXd p(days, 24);
    for (int h = 0; h < 24; ++h) {
        Rng rng(derive_seed(21, static_cast<std::uint64_t>(h)));
        std::vector<double> x(static_cast<std::size_t>(days + 500), 4.0);
        for (std::size_t t = 7; t < x.size(); ++t)
            x[t] = 1.0 + 0.5 * x[t - 1] + 0.2 * x[t - 2] + 0.1 * x[t - 7] + rng.normal();
        for (int d = 0; d < days; ++d) p(d, h) = x[static_cast<std::size_t>(500 + d)];
    }
    // One hour's intercept has sd near 0.1 at D = 2000 (it is 0.2 times a
    // process mean of 5), so slopes are checked on the average of the 24
    // independent hourly fits and the intercept against 3 standard errors.
    const auto model = fit_expert(panel_of(p), false);
    std::vector<double> intercepts;
    Eigen::Vector3d slopes = Eigen::Vector3d::Zero();
    for (const auto& hour : std::get<ExpertState>(model.state).hours) {
        intercepts.push_back(hour.intercept);
        slopes += hour.coefficients / 24.0;
        CHECK(std::abs(hour.coefficients(0) - 0.5) <= 0.1);
    }
    const VectorXd c = Eigen::Map<const VectorXd>(intercepts.data(), 24);
    const double se = std::sqrt((c.array() - c.mean()).square().sum() / 23.0 / 24.0);
    CHECK(std::abs(c.mean() - 1.0) <= 3.0 * se);
    CHECK(std::abs(slopes(0) - 0.5) <= 0.05);
    CHECK(std::abs(slopes(1) - 0.2) <= 0.05);
    CHECK(std::abs(slopes(2) - 0.1) <= 0.05);
}

TEST_CASE("expert labels") {
    const auto panel = synth_panel(backtest::synth_preset("weekday", 120), 3);
    const auto plain = std::get<ExpertState>(fit_expert(panel, false).state);
    const auto wd = std::get<ExpertState>(fit_expert(panel, true).state);
    for (int h = 0; h < 24; ++h) {
        CHECK(render_all(plain.hours[static_cast<std::size_t>(h)].labels) ==
              std::vector<std::string>{std::to_string(h) + "@1", std::to_string(h) + "@2", std::to_string(h) + "@7"});
        CHECK(render_all(wd.hours[static_cast<std::size_t>(h)].labels) ==
              std::vector<std::string>{std::to_string(h) + "@1", std::to_string(h) + "@2", std::to_string(h) + "@7",
                                       "Sun", "Mon", "Sat"});
    }
    CHECK_THROWS_AS(fit_expert(panel.slice(0, 11), false), DataError);
}

TEST_CASE("nesting of expert, same-hour AR and the full lag design") {
    const auto panel = synth_panel(backtest::synth_preset("cross-hour", 400), 31);
    const MatrixXd& p = panel.prices();
    const Index first = 36;
    const Index n = panel.days() - first;
    const auto dm = dataio::demean(panel);
    for (int h : {0, 11, 23}) {
        const VectorXd y = p.col(h).tail(n);
        MatrixXd expert(n, 4), ar7(n, 8);
        expert.col(0).setOnes();
        ar7.col(0).setOnes();
        for (int k = 1; k <= 7; ++k) ar7.col(k) = p.col(h).segment(first - k, n);
        expert.col(1) = ar7.col(1);
        expert.col(2) = ar7.col(2);
        expert.col(3) = ar7.col(7);
        const Design design = build_design(dm.centered, h, LagIndexSet{});
        MatrixXd full(n, design.x.cols() + 1);
        full << VectorXd::Ones(n), design.x;
        const double r_expert = rss(expert, y);
        const double r_ar7 = rss(ar7, y);
        const double r_full = rss(full, y);
        CHECK(r_expert >= r_ar7);
        CHECK(r_ar7 >= r_full);
        // Expert OLS agrees with the stored expert fit on the same rows only approximately
        // (it uses rows 7..D-1), so compare the library fit on its own rows.
        const auto model = fit_expert(panel, false);
        const auto& e = std::get<ExpertState>(model.state).hours[static_cast<std::size_t>(h)];
        MatrixXd own(panel.days() - 7, 4);
        own.col(0).setOnes();
        own.col(1) = p.col(h).segment(6, panel.days() - 7);
        own.col(2) = p.col(h).segment(5, panel.days() - 7);
        own.col(3) = p.col(h).segment(0, panel.days() - 7);
        const VectorXd beta = oracle::normal_equations(own, p.col(h).tail(panel.days() - 7));
        CHECK(e.intercept == doctest::Approx(beta(0)).epsilon(1e-8));
        for (int j = 0; j < 3; ++j) CHECK(e.coefficients(j) == doctest::Approx(beta(j + 1)).epsilon(1e-8));
    }
}

TEST_CASE("univariate AR recovers an hourly AR(1)") {
    int small = 0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        const auto x = oracle::simulate_ar({0.9}, 24 * 1000, 40 + s);
        const auto model = fit_univariate_ar(hourly_series_panel(x, 50.0), false);
        const auto& fit = std::get<HourlyArState>(model.state).fit;
        REQUIRE(fit.order >= 1);
        CHECK(std::abs(fit.phi(0) - 0.9) <= 0.02);
        small += fit.order <= 5;
    }
    CHECK(small >= 8);
}

TEST_CASE("univariate AR reaches past lag 168 on weekly structure") {
    std::vector<double> phi(168, 0.0);
    phi[0] = 0.5;
    phi[167] = 0.3;
    const auto x = oracle::simulate_ar(phi, 24 * 300, 41);
    const auto model = fit_univariate_ar(hourly_series_panel(x, 50.0), false);
    CHECK(std::get<HourlyArState>(model.state).fit.order >= 168);
}

TEST_CASE("univariate AR-wd removes one constant per weekday") {
    auto spec = scenario::white_noise(350, 0.0, 1.0);
    spec.start = kStart;
    spec.weekday_offsets = MatrixXd::Zero(7, 24);
    for (int k = 0; k < 7; ++k) spec.weekday_offsets.row(k).setConstant(10.0 * k);
    const auto model = fit_univariate_ar(synth_panel(spec, 42), true);
    const auto& s = std::get<HourlyArState>(model.state);
    REQUIRE(s.weekday_effects.size() == 7);
    const double se = 1.0 / std::sqrt(350.0 / 7.0 * 24.0);
    for (int k = 0; k < 7; ++k) CHECK(std::abs(s.weekday_effects(k) - 10.0 * k) <= 4.0 * se);
}

TEST_CASE("PCA-VAR with all 24 factors matches an unrestricted VAR(1)") {
    auto spec = backtest::synth_preset("cross-hour", 2000);
    spec.weekday_offsets.resize(0, 0);
    const auto panel = synth_panel(spec, 51);
    ModelConfig cfg;
    cfg.var_max_order = 1;
    const auto model = fit_pca_var(panel, 24, false, cfg);
    const auto& s = std::get<PcaState>(model.state);
    REQUIRE(s.var.order == 1);
    const MatrixXd& g = s.factors.loadings;
    const MatrixXd implied = g * s.var.phi[0] * g.transpose();
    const auto direct = estim::multivar_yule_walker(panel.prices(), 1);
    REQUIRE(direct.order == 1);
    CHECK((implied - direct.phi[0]).cwiseAbs().maxCoeff() <= 0.05);
    CHECK((implied - spec.phi[0]).cwiseAbs().maxCoeff() <= 0.1);

    // Same one-step forecasts as the price-space VAR.
    const auto hist = panel.slice(0, 1000);
    const VectorXd f = forecast_day(model, hist);
    const VectorXd g1 = direct.intercept + direct.phi[0] * (hist.prices().row(999).transpose() - direct.intercept);
    CHECK((f - g1).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("PCA-VAR on a rank-2 panel") {
    Rng rng(52);
    const int days = 300;
    const MatrixXd a = oracle::random_matrix(rng, 24, 2);
    const MatrixXd scores = 5.0 * oracle::random_matrix(rng, days, 2);
    const MatrixXd prices = (scores * a.transpose()).rowwise() + VectorXd::LinSpaced(24, 30, 50).transpose();
    const auto panel = panel_of(prices);
    const auto model = fit_pca_var(panel, 2, false);
    const auto& s = std::get<PcaState>(model.state);
    const MatrixXd back = estim::pca_reconstruct(s.factors, estim::pca_scores(s.factors, prices, 2));
    const double var = (prices.rowwise() - prices.colwise().mean()).squaredNorm() / prices.size();
    CHECK((back - prices).squaredNorm() / prices.size() <= 1e-6 * var);

    for (int k : {2, 3, 12}) CHECK(forecast_day(fit_pca_var(panel, k, true), panel).size() == 24);
    CHECK_THROWS_AS(fit_pca_var(panel, 0, false), UsageError);
    CHECK_THROWS_AS(fit_pca_var(panel, 25, false), UsageError);
    CHECK_THROWS_AS(fit(FamilySpec::parse("PCA"), panel), UsageError);
}

TEST_CASE("every family fits deterministically, forecasts finitely and survives a dump round trip") {
    const auto panel = synth_panel(backtest::synth_preset("cross-hour", 120), 61);
    auto families = standard_families();
    for (auto& f : families)
        if (f.family == Family::Pca) f.pca_factors = 3;
    for (const auto& family : families) {
        CAPTURE(family.name());
        const auto a = fit(family, panel);
        const auto b = fit(family, panel);
        const VectorXd fa = forecast_day(a, panel);
        CHECK(fa.allFinite());
        CHECK(fa == forecast_day(b, panel));
        CHECK(to_json(a) == to_json(b));

        const auto dump = to_json(a);
        const auto back = from_json(nlohmann::json::parse(dump.dump()));
        CHECK(back.family == a.family);
        CHECK(back.required_history() == a.required_history());
        CHECK(forecast_day(back, panel) == fa);
        CHECK(to_json(back) == dump);

        const MatrixXd e = in_sample_errors(a, panel);
        CHECK(e.rows() == panel.days() - std::max(a.required_history(), 1));
        CHECK(e.allFinite());
    }
}

TEST_CASE("model dump layout and malformed dumps") {
    const auto panel = synth_panel(backtest::synth_preset("cross-hour", 120), 62);
    const auto dump = to_json(fit_expert(panel, true));
    CHECK(dump.at("family") == "exp.AR-wd");
    CHECK(dump.at("window_start") == dataio::format_date(panel.first_date()));
    CHECK(dump.at("window_end") == dataio::format_date(panel.last_date()));
    CHECK(dump.at("mu").size() == 24);
    REQUIRE(dump.at("hours").size() == 24);
    const auto& h5 = dump.at("hours").at(5);
    CHECK(h5.at("h") == 5);
    std::vector<std::string> labels;
    for (const auto& c : h5.at("coefficients")) labels.push_back(c.at("label"));
    CHECK(labels == std::vector<std::string>{"intercept", "5@1", "5@2", "5@7", "Sun", "Mon", "Sat"});

    CHECK_THROWS_AS(from_json(nlohmann::json::object()), DataError);
    auto bad = dump;
    bad["family"] = "ridge";
    CHECK_THROWS_AS(from_json(bad), DataError);
    bad = dump;
    bad["hours"].erase(3);
    CHECK_THROWS_AS(from_json(bad), DataError);
    bad = dump;
    bad["hours"][0]["coefficients"][1]["label"] = "nonsense";
    CHECK_THROWS_AS(from_json(bad), DataError);
}
