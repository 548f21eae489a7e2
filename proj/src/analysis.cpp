#include "hourlasso/analysis.hpp"

#include "hourlasso/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace hourlasso::analysis {

using dataio::kHours;
using dataio::kWeekdays;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return {buf, res.ptr};
}

std::vector<const ImportanceEntry*> top(const HourImportance& hour, int k) {
    std::vector<const ImportanceEntry*> out;
    for (const auto& e : hour.entries) {
        if (static_cast<int>(out.size()) == k) break;
        out.push_back(&e);
    }
    return out;
}

void check_k(int k) {
    if (k < 1) throw UsageError("top-k table needs k >= 1");
}

} // namespace

HourImportance importance(const VectorXd& beta_tilde, const std::vector<models::RegressorLabel>& labels, int hour) {
    if (static_cast<std::size_t>(beta_tilde.size()) != labels.size())
        throw UsageError("importance: coefficient and label counts differ");
    HourImportance out;
    out.hour = hour;
    const double total = beta_tilde.cwiseAbs().sum();
    if (total == 0.0) {
        out.degenerate = true;
        return out;
    }
    for (Index i = 0; i < beta_tilde.size(); ++i)
        if (beta_tilde(i) != 0.0)
            out.entries.push_back({labels[static_cast<std::size_t>(i)], std::abs(beta_tilde(i)) / total, i});
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) { return a.iota > b.iota; });
    return out;
}

std::vector<HourImportance> model_importance(const models::FittedForecaster& model) {
    const auto* state = std::get_if<models::LassoState>(&model.state);
    if (!state) throw UsageError("importance needs a lasso model, got " + model.family.name());
    std::vector<HourImportance> out;
    for (int h = 0; h < kHours; ++h) {
        const auto& hour = state->hours[static_cast<std::size_t>(h)];
        out.push_back(importance(hour.standardized, hour.labels, h));
    }
    return out;
}

std::string format_entry(const ImportanceEntry& entry) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s (%4.1f)", entry.label.render().c_str(), 100.0 * entry.iota);
    return buf;
}

std::string padding_entry() { return format_entry({models::RegressorLabel::lag_of(0, 1), 0.0, 0}); }

void write_top_k_text(std::ostream& out, const std::vector<HourImportance>& hours, int k) {
    check_k(k);
    std::vector<std::vector<std::string>> cells;
    std::size_t width = 0;
    for (int rank = 1; rank <= k; ++rank) width = std::max(width, ("Importance: " + std::to_string(rank)).size());
    for (const auto& hour : hours) {
        std::vector<std::string> row;
        for (const auto* e : top(hour, k)) row.push_back(format_entry(*e));
        while (static_cast<int>(row.size()) < k) row.push_back(padding_entry());
        for (const auto& c : row) width = std::max(width, c.size());
        cells.push_back(std::move(row));
    }
    const auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
    out << "hour";
    for (int rank = 1; rank <= k; ++rank) out << "  " << pad("Importance: " + std::to_string(rank));
    out << '\n';
    for (std::size_t i = 0; i < hours.size(); ++i) {
        char h[8];
        std::snprintf(h, sizeof h, "%4d", hours[i].hour);
        out << h;
        for (const auto& c : cells[i]) out << "  " << pad(c);
        if (hours[i].degenerate) out << "  (all coefficients zero)";
        out << '\n';
    }
}

void write_importance_csv(std::ostream& out, const std::vector<HourImportance>& hours, int k) {
    check_k(k);
    out << "hour,rank,label,iota_pct\n";
    for (const auto& hour : hours) {
        int rank = 0;
        for (const auto* e : top(hour, k))
            out << hour.hour << ',' << ++rank << ',' << e->label.render() << ',' << fixed(100.0 * e->iota, 2) << '\n';
    }
}

MatrixXd corr_grid(const dataio::PricePanel& panel) {
    const Index d = panel.days();
    if (d < 3) throw DataError("correlation grid needs at least 3 days");
    const Index n = d - 1;
    const MatrixXd today = panel.prices().bottomRows(n);
    const MatrixXd yesterday = panel.prices().topRows(n);
    const MatrixXd a = today.rowwise() - today.colwise().mean();
    const MatrixXd b = yesterday.rowwise() - yesterday.colwise().mean();
    const VectorXd sa = a.colwise().norm().transpose();
    const VectorXd sb = b.colwise().norm().transpose();
    for (int h = 0; h < kHours; ++h)
        if (sa(h) == 0.0 || sb(h) == 0.0)
            throw DataError("hour " + std::to_string(h) + " has zero variance; correlation undefined");
    MatrixXd c = a.transpose() * b;
    for (int h = 0; h < kHours; ++h)
        for (int l = 0; l < kHours; ++l) c(h, l) = std::clamp(c(h, l) / (sa(h) * sb(l)), -1.0, 1.0);
    return c;
}

MatrixXd weekly_means(const dataio::PricePanel& panel) {
    MatrixXd sums = MatrixXd::Zero(kWeekdays, kHours);
    std::vector<Index> counts(kWeekdays, 0);
    for (Index d = 0; d < panel.days(); ++d) {
        const int k = panel.weekday(d);
        sums.row(k) += panel.prices().row(d);
        ++counts[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < kWeekdays; ++k) {
        if (counts[static_cast<std::size_t>(k)] == 0)
            throw DataError("no " + std::string(dataio::weekday_name(k)) + " in the panel");
        sums.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
    }
    return sums;
}

void write_corr_csv(std::ostream& out, const MatrixXd& corr) {
    out << "h,l,corr\n";
    for (Index h = 0; h < corr.rows(); ++h)
        for (Index l = 0; l < corr.cols(); ++l) out << h << ',' << l << ',' << fixed(corr(h, l), 6) << '\n';
}

void write_weekly_csv(std::ostream& out, const MatrixXd& means) {
    out << "weekday,hour,mean\n";
    for (Index k = 0; k < means.rows(); ++k)
        for (Index h = 0; h < means.cols(); ++h) out << k << ',' << h << ',' << fixed(means(k, h), 6) << '\n';
}

} // namespace hourlasso::analysis
