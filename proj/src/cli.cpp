#include "hourlasso/cli.hpp"

#include "hourlasso/analysis.hpp"
#include "hourlasso/backtest.hpp"
#include "hourlasso/dataio.hpp"
#include "hourlasso/errors.hpp"
#include "hourlasso/model_io.hpp"
#include "hourlasso/models.hpp"
#include "hourlasso/synth.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace hourlasso::cli {

namespace fs = std::filesystem;
using dataio::PricePanel;

namespace {

struct ModelOptions {
    double lambda_hi = 4.0;
    double lambda_lo = -15.0;
    int lambda_count = 50;
    bool raw_objective = false;
    int p_max_daily = 50;
    int p_max_hourly = 700;
    int p_max_var = 50;

    models::ModelConfig config() const {
        models::ModelConfig c;
        c.lasso.grid = {lambda_hi, lambda_lo, lambda_count};
        c.lasso.solver.objective = raw_objective ? lasso::Objective::Raw : lasso::Objective::Normalized;
        c.daily_ar_max_order = p_max_daily;
        c.hourly_ar_max_order = p_max_hourly;
        c.var_max_order = p_max_var;
        return c;
    }

    void add_to(CLI::App& app) {
        app.add_option("--lambda-hi", lambda_hi, "largest grid exponent (lambda = 2^e)")->capture_default_str();
        app.add_option("--lambda-lo", lambda_lo, "smallest grid exponent")->capture_default_str();
        app.add_option("--lambda-count", lambda_count, "number of powers of two on the grid (0 is appended)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app.add_flag("--lasso-raw-objective", raw_objective, "penalize the unnormalized RSS instead of RSS/n");
        app.add_option("--p-max-daily", p_max_daily, "maximal order of the 24 daily AR models")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        app.add_option("--p-max-hourly", p_max_hourly, "maximal order of the hourly AR model")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        app.add_option("--p-max-var", p_max_var, "maximal order of the factor VAR")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    }
};

std::vector<models::FamilySpec> parse_families(const std::vector<std::string>& names) {
    std::vector<models::FamilySpec> out;
    for (const auto& n : names) {
        if (n == "all") {
            const auto all = models::standard_families();
            out.insert(out.end(), all.begin(), all.end());
        } else {
            out.push_back(models::FamilySpec::parse(n));
        }
    }
    if (out.empty()) throw UsageError("no model families given");
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write " + path.string());
    file << text;
    if (!file) throw DataError("write failed: " + path.string());
}

// Writes to `path`, or to `out` when the path is empty or "-".
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(out);
        return;
    }
    std::ostringstream buf;
    fn(buf);
    write_text(path, buf.str());
}

PricePanel trailing(const PricePanel& panel, int window) {
    const auto days = static_cast<Eigen::Index>(window);
    if (panel.days() < days)
        throw DataError("panel has " + std::to_string(panel.days()) + " days, window needs " + std::to_string(window));
    return panel.slice(panel.days() - days, days);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Next-day hourly electricity price forecasting with lasso and benchmark models", "hourlasso"};
    app.set_config("--config", "", "INI file with option defaults (flags override it)");
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--threads", threads, "worker threads (results do not depend on it)")
        ->envname("HOURLASSO_THREADS")
        ->check(CLI::PositiveNumber);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "raw hourly CSV -> DST-normalized daily panel CSV");
    std::string ingest_in, ingest_out;
    dataio::CsvColumns columns;
    ingest->add_option("-i,--input", ingest_in, "raw CSV with timestamp and price columns")->required();
    ingest->add_option("-o,--output", ingest_out, "panel CSV (stdout if omitted)");
    ingest->add_option("--timestamp-column", columns.timestamp)->capture_default_str();
    ingest->add_option("--price-column", columns.price)->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "synthetic panel from a named scenario");
    std::string preset = "cross-hour", synth_out, synth_start;
    int synth_days = 1000;
    std::uint64_t synth_seed = 1;
    std::optional<double> phi_diag, noise_sd;
    synth->add_option("--preset", preset, "cross-hour, weekday or seasonal-weekly")->capture_default_str();
    synth->add_option("--days", synth_days)->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--phi", phi_diag, "override the lag-1 diagonal");
    synth->add_option("--noise", noise_sd, "innovation standard deviation");
    synth->add_option("--start", synth_start, "first date (YYYY-MM-DD)");
    synth->add_option("-o,--output", synth_out, "panel CSV (stdout if omitted)");

    // backtest
    auto* bt = app.add_subcommand("backtest", "rolling-window out-of-sample evaluation");
    backtest::BacktestConfig bt_cfg;
    ModelOptions bt_model;
    std::string bt_in, bt_out_dir = "results", market;
    std::vector<std::string> bt_families{"all"};
    bt->add_option("-i,--input", bt_in, "panel or raw CSV")->required();
    bt->add_option("--window", bt_cfg.window, "estimation window in days")->capture_default_str();
    bt->add_option("--families", bt_families, "comma-separated family names, or all")
        ->delimiter(',')
        ->capture_default_str();
    bt->add_option("--bootstrap", bt_cfg.bootstrap, "bootstrap sample size")->capture_default_str();
    bt->add_option("--seed", bt_cfg.seed)->capture_default_str();
    bt->add_option("--refit-every", bt_cfg.refit_every, "days between refits")->capture_default_str();
    bt->add_option("--k-min", bt_cfg.pca_k_min, "smallest PCA factor count")->capture_default_str();
    bt->add_option("--k-max", bt_cfg.pca_k_max, "largest PCA factor count")->capture_default_str();
    bt->add_option("--market", market, "label stored in the report");
    bt->add_option("-o,--out-dir", bt_out_dir, "directory for report.json and forecasts.csv")->capture_default_str();
    bt_model.add_to(*bt);

    // forecast
    auto* fc = app.add_subcommand("forecast", "next-day forecast from a saved or freshly fitted model");
    ModelOptions fc_model;
    std::string fc_in, fc_model_path, fc_family = "lasso-wd", fc_save;
    int fc_window = 730;
    fc->add_option("-i,--input", fc_in, "panel or raw CSV; the forecast is for the day after its last row")
        ->required();
    fc->add_option("--model", fc_model_path, "model dump written by --save-model");
    fc->add_option("--family", fc_family, "family to fit when no model is given")->capture_default_str();
    fc->add_option("--window", fc_window, "trailing days to fit on")->capture_default_str();
    fc->add_option("--save-model", fc_save, "write the fitted model as JSON");
    fc_model.add_to(*fc);

    // importance
    auto* imp = app.add_subcommand("importance", "most relevant lasso coefficients per hour");
    ModelOptions imp_model;
    std::string imp_in, imp_model_path, imp_family = "lasso-wd", imp_csv;
    int imp_window = 730, top_k = 7;
    imp->add_option("-i,--input", imp_in, "panel or raw CSV to fit on (its trailing window)");
    imp->add_option("--model", imp_model_path, "lasso model dump to read instead of fitting");
    imp->add_option("--family", imp_family, "lasso or lasso-wd")->capture_default_str();
    imp->add_option("--window", imp_window)->capture_default_str();
    imp->add_option("-k,--top", top_k, "entries per hour")->check(CLI::PositiveNumber)->capture_default_str();
    imp->add_option("--csv", imp_csv, "also write hour,rank,label,iota_pct");
    imp_model.add_to(*imp);

    // stats
    auto* stats = app.add_subcommand("stats", "plot-ready descriptive statistics");
    stats->require_subcommand(1);
    std::string stats_in, stats_out;
    auto* corr = stats->add_subcommand("corr", "lag-1 cross-hour correlation grid (h,l,corr)");
    auto* weekmean = stats->add_subcommand("weekmean", "weekday x hour sample means (weekday,hour,mean)");
    for (auto* sub : {corr, weekmean}) {
        sub->add_option("-i,--input", stats_in, "panel or raw CSV")->required();
        sub->add_option("-o,--output", stats_out, "CSV path (stdout if omitted)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        // CLI11 silently falls back to the default when the environment value fails validation
        if (const char* env = std::getenv("HOURLASSO_THREADS")) {
            int value = 0;
            const std::string_view text(env);
            const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (ec != std::errc{} || end != text.data() + text.size() || value < 1)
                throw UsageError("HOURLASSO_THREADS must be a positive integer, got '" + std::string(text) + "'");
        }
        if (threads < 1) throw UsageError("--threads must be positive");
        if (*ingest) {
            const auto panel = dataio::dst_normalize(dataio::ingest_csv(ingest_in, columns));
            emit(ingest_out, out, [&](std::ostream& o) { dataio::write_panel_csv(o, panel); });
            err << "ingest: " << panel.days() << " days " << dataio::format_date(panel.first_date()) << " .. "
                << dataio::format_date(panel.last_date()) << '\n';
        } else if (*synth) {
            auto spec = backtest::synth_preset(preset, synth_days);
            if (phi_diag) backtest::set_lag1_diagonal(spec, *phi_diag);
            if (noise_sd) spec.noise_sd = *noise_sd;
            if (!synth_start.empty()) spec.start = dataio::parse_date(synth_start);
            const auto panel = backtest::synth_panel(spec, synth_seed);
            emit(synth_out, out, [&](std::ostream& o) { dataio::write_panel_csv(o, panel); });
        } else if (*bt) {
            bt_cfg.families = parse_families(bt_families);
            bt_cfg.threads = threads;
            bt_cfg.model = bt_model.config();
            bt_cfg.validate();
            const auto panel = dataio::load_panel(bt_in);
            int last_percent = -1;
            const auto progress = [&](std::size_t done, std::size_t total) {
                const int percent = static_cast<int>(100 * done / total);
                if (percent == last_percent) return;
                last_percent = percent;
                err << "backtest: " << done << "/" << total << " forecast days (" << percent << "%)\n";
            };
            const auto report = backtest::run_backtest(panel, bt_cfg, market, progress);
            fs::create_directories(bt_out_dir);
            write_text(fs::path(bt_out_dir) / "report.json", backtest::report_json(report).dump(2) + "\n");
            std::ostringstream csv;
            backtest::write_forecast_csv(csv, report);
            write_text(fs::path(bt_out_dir) / "forecasts.csv", csv.str());
            backtest::write_summary(out, report);
        } else if (*fc) {
            const auto panel = dataio::load_panel(fc_in);
            models::FittedForecaster model;
            if (!fc_model_path.empty()) {
                model = models::load_model(fc_model_path);
            } else {
                const auto family = models::FamilySpec::parse(fc_family);
                model = models::fit(family, trailing(panel, fc_window), fc_model.config());
            }
            if (!fc_save.empty()) {
                std::ostringstream dump;
                dump << models::to_json(model).dump(2) << '\n';
                write_text(fc_save, dump.str());
            }
            const auto forecast = models::forecast_day(model, panel);
            out << "date";
            for (int h = 0; h < dataio::kHours; ++h) out << (h < 10 ? ",h0" : ",h") << h;
            out << '\n' << dataio::format_date(dataio::add_days(panel.last_date(), 1));
            for (int h = 0; h < dataio::kHours; ++h) out << ',' << dataio::format_number(forecast(h));
            out << '\n';
        } else if (*imp) {
            models::FittedForecaster model;
            if (!imp_model_path.empty()) {
                model = models::load_model(imp_model_path);
            } else {
                if (imp_in.empty()) throw UsageError("importance needs --input or --model");
                const auto family = models::FamilySpec::parse(imp_family);
                if (family.family != models::Family::Lasso) throw UsageError("importance needs lasso or lasso-wd");
                model = models::fit(family, trailing(dataio::load_panel(imp_in), imp_window), imp_model.config());
            }
            const auto table = analysis::model_importance(model);
            analysis::write_top_k_text(out, table, top_k);
            if (!imp_csv.empty()) {
                std::ostringstream csv;
                analysis::write_importance_csv(csv, table, top_k);
                write_text(imp_csv, csv.str());
            }
            for (const auto& hour : table)
                if (hour.degenerate) {
                    err << "importance: hour " << hour.hour << " has no nonzero coefficient\n";
                    return kExitModel;
                }
        } else if (*stats) {
            const auto panel = dataio::load_panel(stats_in);
            if (*corr) {
                const auto grid = analysis::corr_grid(panel);
                emit(stats_out, out, [&](std::ostream& o) { analysis::write_corr_csv(o, grid); });
            } else {
                const auto means = analysis::weekly_means(panel);
                emit(stats_out, out, [&](std::ostream& o) { analysis::write_weekly_csv(o, means); });
            }
        }
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericError& e) {
        err << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

} // namespace hourlasso::cli
