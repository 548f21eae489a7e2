#include "hourlasso/backtest.hpp"

#include "hourlasso/errors.hpp"
#include "hourlasso/parallel.hpp"
#include "hourlasso/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>

namespace hourlasso::backtest {

using dataio::kHours;
using dataio::PricePanel;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using models::Family;
using models::FamilySpec;

void BacktestConfig::validate() const {
    const int min_window = model.lags.max_lag() + 1;
    if (window < min_window)
        throw UsageError("window must be at least " + std::to_string(min_window) + " days, got " +
                         std::to_string(window));
    if (bootstrap < 1) throw UsageError("bootstrap sample size must be at least 1");
    if (refit_every < 1) throw UsageError("refit stride must be at least 1");
    if (families.empty()) throw UsageError("no model families requested");
    if (pca_k_min < 1 || pca_k_max > kHours || pca_k_min > pca_k_max)
        throw UsageError("PCA factor range must lie within 1..24");
    if (model.daily_ar_max_order < 0 || model.hourly_ar_max_order < 0 || model.var_max_order < 0)
        throw UsageError("maximal AR orders must be non-negative");
    if (model.lasso.grid.count < 1) throw UsageError("lambda grid needs at least one value");
}

double mae(const MatrixXd& errors) {
    if (errors.size() == 0) throw UsageError("no forecast errors");
    return errors.cwiseAbs().sum() / static_cast<double>(errors.size());
}

double rmse(const MatrixXd& errors) {
    if (errors.size() == 0) throw UsageError("no forecast errors");
    return std::sqrt(errors.squaredNorm() / static_cast<double>(errors.size()));
}

VectorXd mae_h(const MatrixXd& errors) {
    if (errors.rows() == 0) throw UsageError("no forecast errors");
    return errors.cwiseAbs().colwise().mean().transpose();
}

VectorXd rmse_h(const MatrixXd& errors) {
    if (errors.rows() == 0) throw UsageError("no forecast errors");
    return (errors.array().square().colwise().mean()).sqrt().transpose();
}

double mae(const ForecastMatrix& fm) { return mae(fm.errors()); }
double rmse(const ForecastMatrix& fm) { return rmse(fm.errors()); }
VectorXd mae_h(const ForecastMatrix& fm) { return mae_h(fm.errors()); }
VectorXd rmse_h(const ForecastMatrix& fm) { return rmse_h(fm.errors()); }

namespace {

template <class Error>
[[noreturn]] void rethrow_with(const std::string& prefix, const Error& e) {
    throw Error(prefix + e.what());
}

class Progress {
public:
    Progress(const ProgressFn& fn, std::size_t total) : fn_(fn), total_(total) {}

    void step(std::size_t days) {
        if (!fn_) return;
        std::lock_guard lock(mutex_);
        done_ += days;
        fn_(done_, total_);
    }

private:
    const ProgressFn& fn_;
    std::size_t total_;
    std::size_t done_ = 0;
    std::mutex mutex_;
};

double sample_sd(const std::vector<double>& values) {
    const std::size_t b = values.size();
    if (b < 2) return 0.0;
    // Shifted by the first value so identical replicates give exactly zero.
    double mean = 0.0;
    for (double v : values) mean += v - values[0];
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (double v : values) ss += (v - values[0] - mean) * (v - values[0] - mean);
    return std::sqrt(ss / static_cast<double>(b - 1));
}

std::vector<Index> resample_rows(Index n, std::uint64_t seed, std::uint64_t replicate) {
    Rng rng(derive_seed(seed, replicate));
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    return rows;
}

void check_replicates(const ForecastMatrix& fm, int replicates) {
    if (replicates < 1) throw UsageError("bootstrap sample size must be at least 1");
    if (fm.days() == 0) throw UsageError("bootstrap needs at least one forecast day");
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

} // namespace

std::vector<ForecastMatrix> rolling_forecasts(const PricePanel& panel, std::span<const FamilySpec> families,
                                              const BacktestConfig& config, const ProgressFn& progress) {
    config.validate();
    for (const auto& f : families)
        if (f.family == Family::Pca && f.pca_factors <= 0)
            throw UsageError("rolling_forecasts needs a fixed PCA factor count");
    const Index window = config.window;
    if (panel.days() <= window)
        throw DataError("panel of " + std::to_string(panel.days()) + " days is not longer than the window of " +
                        std::to_string(window) + " days");
    const Index n_out = panel.days() - window;
    const Index stride = config.refit_every;
    const Index blocks = (n_out + stride - 1) / stride;

    std::vector<ForecastMatrix> out(families.size());
    for (auto& fm : out) {
        fm.forecast.resize(n_out, kHours);
        fm.actual = panel.prices().bottomRows(n_out);
        for (Index i = 0; i < n_out; ++i) fm.dates.push_back(panel.date(window + i));
    }

    Progress tracker(progress, static_cast<std::size_t>(n_out) * families.size());
    const std::size_t tasks = families.size() * static_cast<std::size_t>(blocks);
    parallel_for(tasks, config.threads, [&](std::size_t task) {
        const std::size_t f = task % families.size();
        const Index block = static_cast<Index>(task / families.size());
        const Index begin = block * stride;
        const Index end = std::min(begin + stride, n_out);
        const FamilySpec& spec = families[f];
        Index day = begin;
        const auto context = [&] {
            return "day " + dataio::format_date(panel.date(window + day)) + ", family " + spec.name() + ": ";
        };
        try {
            const auto model = models::fit(spec, panel.slice(begin, window), config.model);
            const Index need = std::max(model.required_history(), 1);
            for (; day < end; ++day) {
                const auto history = panel.slice(window + day - need, need);
                out[f].forecast.row(day) = models::forecast_day(model, history).transpose();
            }
        } catch (const NumericError& e) {
            rethrow_with(context(), e);
        } catch (const DataError& e) {
            rethrow_with(context(), e);
        } catch (const UsageError& e) {
            rethrow_with(context(), e);
        }
        tracker.step(static_cast<std::size_t>(end - begin));
    });
    return out;
}

ForecastMatrix rolling_backtest(const PricePanel& panel, const FamilySpec& family, const BacktestConfig& config,
                                const ProgressFn& progress) {
    return std::move(rolling_forecasts(panel, std::span(&family, 1), config, progress).front());
}

namespace {

std::vector<FamilySpec> pca_candidates(bool with_weekdays, const BacktestConfig& config) {
    std::vector<FamilySpec> specs;
    for (int k = config.pca_k_min; k <= config.pca_k_max; ++k) specs.push_back({Family::Pca, with_weekdays, k});
    return specs;
}

PcaSelection choose_k(const std::vector<FamilySpec>& specs, std::vector<ForecastMatrix> forecasts) {
    PcaSelection sel;
    std::size_t best = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        sel.candidates.push_back(specs[i].pca_factors);
        sel.mae_by_k.push_back(mae(forecasts[i]));
        if (sel.mae_by_k[i] < sel.mae_by_k[best]) best = i;
    }
    sel.k = specs[best].pca_factors;
    sel.forecasts = std::move(forecasts[best]);
    return sel;
}

} // namespace

PcaSelection select_pca_k(const PricePanel& panel, bool with_weekdays, const BacktestConfig& config,
                          const ProgressFn& progress) {
    const auto specs = pca_candidates(with_weekdays, config);
    return choose_k(specs, rolling_forecasts(panel, specs, config, progress));
}

double bootstrap_sd(const ForecastMatrix& fm, const Statistic& statistic, int replicates, std::uint64_t seed,
                    int threads) {
    check_replicates(fm, replicates);
    const MatrixXd errors = fm.errors();
    std::vector<double> values(static_cast<std::size_t>(replicates));
    parallel_for(values.size(), threads, [&](std::size_t b) {
        const auto rows = resample_rows(errors.rows(), seed, b);
        MatrixXd sample(errors.rows(), errors.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) sample.row(static_cast<Index>(i)) = errors.row(rows[i]);
        values[b] = statistic(sample);
    });
    return sample_sd(values);
}

MetricSds bootstrap_sds(const ForecastMatrix& fm, int replicates, std::uint64_t seed, int threads) {
    check_replicates(fm, replicates);
    const MatrixXd abs_err = fm.errors().cwiseAbs();
    const MatrixXd sq_err = abs_err.array().square();
    const Index n = abs_err.rows();
    const Index hours = abs_err.cols();
    const auto b_count = static_cast<std::size_t>(replicates);

    // Per replicate: [mae, rmse, mae_h..., rmse_h...]
    const Index width = 2 + 2 * hours;
    std::vector<VectorXd> stats(b_count);
    parallel_for(b_count, threads, [&](std::size_t b) {
        const auto rows = resample_rows(n, seed, b);
        VectorXd abs_sum = VectorXd::Zero(hours);
        VectorXd sq_sum = VectorXd::Zero(hours);
        for (Index r : rows) {
            abs_sum += abs_err.row(r).transpose();
            sq_sum += sq_err.row(r).transpose();
        }
        VectorXd s(width);
        const double nn = static_cast<double>(n);
        s(0) = abs_sum.sum() / (nn * static_cast<double>(hours));
        s(1) = std::sqrt(sq_sum.sum() / (nn * static_cast<double>(hours)));
        s.segment(2, hours) = abs_sum / nn;
        s.segment(2 + hours, hours) = (sq_sum / nn).cwiseSqrt();
        stats[b] = std::move(s);
    });

    VectorXd sd(width);
    std::vector<double> column(b_count);
    for (Index j = 0; j < width; ++j) {
        for (std::size_t b = 0; b < b_count; ++b) column[b] = stats[b](j);
        sd(j) = sample_sd(column);
    }
    MetricSds out;
    out.mae = sd(0);
    out.rmse = sd(1);
    out.mae_h = sd.segment(2, hours);
    out.rmse_h = sd.segment(2 + hours, hours);
    return out;
}

void significance_flags(BacktestReport& report) {
    auto& fams = report.families;
    if (fams.empty()) return;
    std::size_t best_mae = 0;
    std::size_t best_rmse = 0;
    for (std::size_t i = 1; i < fams.size(); ++i) {
        if (fams[i].mae < fams[best_mae].mae) best_mae = i;
        if (fams[i].rmse < fams[best_rmse].rmse) best_rmse = i;
    }
    const double mae_bound = fams[best_mae].mae + 2.0 * fams[best_mae].sd.mae;
    const double rmse_bound = fams[best_rmse].rmse + 2.0 * fams[best_rmse].sd.rmse;
    for (std::size_t i = 0; i < fams.size(); ++i) {
        fams[i].best_mae = i == best_mae;
        fams[i].best_rmse = i == best_rmse;
        fams[i].not_worse_mae = fams[i].mae <= mae_bound;
        fams[i].not_worse_rmse = fams[i].rmse <= rmse_bound;
    }
}

BacktestReport run_backtest(const PricePanel& panel, const BacktestConfig& config, std::string market,
                            const ProgressFn& progress) {
    config.validate();
    // Every forecast job goes into one pool; auto-K PCA expands into its candidates.
    std::vector<FamilySpec> jobs;
    std::vector<std::pair<std::size_t, std::size_t>> span_of;  // [first job, job count) per family
    for (const auto& f : config.families) {
        const std::size_t first = jobs.size();
        if (f.family == Family::Pca && f.pca_factors <= 0) {
            const auto candidates = pca_candidates(f.weekdays, config);
            jobs.insert(jobs.end(), candidates.begin(), candidates.end());
        } else {
            jobs.push_back(f);
        }
        span_of.emplace_back(first, jobs.size() - first);
    }
    auto forecasts = rolling_forecasts(panel, jobs, config, progress);

    BacktestReport report;
    report.market = std::move(market);
    report.config = config;
    for (std::size_t i = 0; i < config.families.size(); ++i) {
        const auto& requested = config.families[i];
        const auto [first, count] = span_of[i];
        FamilyResult r;
        r.name = requested.name();
        if (requested.family == Family::Pca && requested.pca_factors <= 0) {
            const std::vector<FamilySpec> specs(jobs.begin() + static_cast<std::ptrdiff_t>(first),
                                                jobs.begin() + static_cast<std::ptrdiff_t>(first + count));
            std::vector<ForecastMatrix> fms(std::make_move_iterator(forecasts.begin() + static_cast<std::ptrdiff_t>(first)),
                                            std::make_move_iterator(forecasts.begin() +
                                                                    static_cast<std::ptrdiff_t>(first + count)));
            auto sel = choose_k(specs, std::move(fms));
            r.family = {Family::Pca, requested.weekdays, sel.k};
            r.forecasts = std::move(sel.forecasts);
            r.pca_candidates = std::move(sel.candidates);
            r.pca_mae_by_k = std::move(sel.mae_by_k);
        } else {
            r.family = requested;
            r.forecasts = std::move(forecasts[first]);
        }
        r.mae = mae(r.forecasts);
        r.rmse = rmse(r.forecasts);
        r.mae_h = mae_h(r.forecasts);
        r.rmse_h = rmse_h(r.forecasts);
        r.sd = bootstrap_sds(r.forecasts, config.bootstrap, config.seed, config.threads);
        report.families.push_back(std::move(r));
    }
    significance_flags(report);
    return report;
}

namespace {

nlohmann::json vec_json(const VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

} // namespace

nlohmann::json report_json(const BacktestReport& report) {
    using nlohmann::json;
    const auto& c = report.config;
    json names = json::array();
    for (const auto& f : c.families) names.push_back(f.name());
    json config = {
        {"window", c.window},
        {"refit_every", c.refit_every},
        {"bootstrap", c.bootstrap},
        {"seed", c.seed},
        {"families", names},
        {"lambda_grid",
         {{"exponent_hi", c.model.lasso.grid.exponent_hi},
          {"exponent_lo", c.model.lasso.grid.exponent_lo},
          {"count", c.model.lasso.grid.count}}},
        {"lasso_objective", c.model.lasso.solver.objective == lasso::Objective::Raw ? "raw" : "normalized"},
        {"same_hour_lags", c.model.lags.same_hour_lags},
        {"cross_hour_lags", c.model.lags.cross_hour_lags},
        {"p_max_daily", c.model.daily_ar_max_order},
        {"p_max_hourly", c.model.hourly_ar_max_order},
        {"p_max_var", c.model.var_max_order},
        {"pca_k_range", {c.pca_k_min, c.pca_k_max}},
    };
    json families = json::array();
    for (const auto& r : report.families) {
        json f = {{"name", r.name},
                  {"days", r.forecasts.days()},
                  {"mae", r.mae},
                  {"mae_sd", r.sd.mae},
                  {"rmse", r.rmse},
                  {"rmse_sd", r.sd.rmse},
                  {"mae_h", vec_json(r.mae_h)},
                  {"rmse_h", vec_json(r.rmse_h)},
                  {"mae_h_sd", vec_json(r.sd.mae_h)},
                  {"rmse_h_sd", vec_json(r.sd.rmse_h)},
                  {"best", {{"mae", r.best_mae}, {"rmse", r.best_rmse}}},
                  {"not_worse", {{"mae", r.not_worse_mae}, {"rmse", r.not_worse_rmse}}}};
        if (!r.pca_candidates.empty()) {
            f["pca_k"] = r.family.pca_factors;
            json by_k = json::array();
            for (std::size_t i = 0; i < r.pca_candidates.size(); ++i)
                by_k.push_back({{"k", r.pca_candidates[i]}, {"mae", r.pca_mae_by_k[i]}});
            f["pca_mae_by_k"] = by_k;
        }
        families.push_back(f);
    }
    return {{"market", report.market}, {"config", config}, {"families", families}};
}

void write_summary(std::ostream& out, const BacktestReport& report) {
    const auto cell = [](double value, double sd, bool best, bool not_worse) {
        std::string v = fixed(value, 2);
        if (best) v = "**" + v + "**";
        else if (not_worse) v += "*";
        return v + " (" + fixed(sd, 3) + ")";
    };
    std::size_t width = 6;
    for (const auto& r : report.families) {
        std::string label = r.name;
        if (!r.pca_candidates.empty()) label += " [K=" + std::to_string(r.family.pca_factors) + "]";
        width = std::max(width, label.size());
    }
    if (!report.market.empty()) out << "market: " << report.market << '\n';
    if (!report.families.empty())
        out << "out-of-sample days: " << report.families.front().forecasts.days() << ", window: "
            << report.config.window << '\n';
    char line[256];
    std::snprintf(line, sizeof line, "%-*s  %-22s  %-22s\n", static_cast<int>(width), "family", "MAE (sd)",
                  "RMSE (sd)");
    out << line;
    for (const auto& r : report.families) {
        std::string label = r.name;
        if (!r.pca_candidates.empty()) label += " [K=" + std::to_string(r.family.pca_factors) + "]";
        std::snprintf(line, sizeof line, "%-*s  %-22s  %-22s\n", static_cast<int>(width), label.c_str(),
                      cell(r.mae, r.sd.mae, r.best_mae, r.not_worse_mae).c_str(),
                      cell(r.rmse, r.sd.rmse, r.best_rmse, r.not_worse_rmse).c_str());
        out << line;
    }
    out << "**x** best; x* within two bootstrap sd of the best\n";
}

void write_forecast_csv(std::ostream& out, const BacktestReport& report) {
    out << "date,family";
    for (int h = 0; h < kHours; ++h) out << (h < 10 ? ",h0" : ",h") << h;
    out << '\n';
    for (const auto& r : report.families) {
        const auto& fm = r.forecasts;
        for (Index i = 0; i < fm.days(); ++i) {
            out << dataio::format_date(fm.dates[static_cast<std::size_t>(i)]) << ',' << r.name;
            for (Index h = 0; h < fm.forecast.cols(); ++h) out << ',' << dataio::format_number(fm.forecast(i, h));
            out << '\n';
        }
    }
}

} // namespace hourlasso::backtest
