#pragma once

#include "hourlasso/dataio.hpp"
#include "hourlasso/labels.hpp"
#include "hourlasso/models.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace hourlasso::analysis {

struct ImportanceEntry {
    models::RegressorLabel label;
    double iota = 0.0;  // |b_i| / sum_j |b_j|
    Eigen::Index column = 0;
};

struct HourImportance {
    int hour = 0;
    std::vector<ImportanceEntry> entries;  // nonzero coefficients, descending iota
    bool degenerate = false;               // all coefficients zero; entries empty
};

/// Ranks the nonzero standardized coefficients by share of the absolute sum;
/// ties keep column order.
HourImportance importance(const Eigen::VectorXd& beta_tilde, const std::vector<models::RegressorLabel>& labels,
                          int hour = 0);

/// importance() for every hour of a lasso model. Throws UsageError for other families.
std::vector<HourImportance> model_importance(const models::FittedForecaster& model);

/// "23@1 (70.6)": label and percentage with one decimal.
std::string format_entry(const ImportanceEntry& entry);
std::string padding_entry();

/// Top-k labels per hour, padded with "0@1 ( 0.0)" where an hour has fewer nonzeros.
void write_top_k_text(std::ostream& out, const std::vector<HourImportance>& hours, int k = 7);

/// `hour,rank,label,iota_pct` for the top k entries of each hour.
void write_importance_csv(std::ostream& out, const std::vector<HourImportance>& hours, int k = 7);

/// C(h, l) = Cor(P_{d,h}, P_{d-1,l}) over d = 2..D. Throws DataError on a constant hour.
Eigen::MatrixXd corr_grid(const dataio::PricePanel& panel);

/// 7 x 24 means by (weekday, hour); row 0 is Sunday. Throws DataError if a weekday is absent.
Eigen::MatrixXd weekly_means(const dataio::PricePanel& panel);

/// `h,l,corr`, 576 rows, correlations with 6 decimals.
void write_corr_csv(std::ostream& out, const Eigen::MatrixXd& corr);

/// `weekday,hour,mean`, 168 rows, weekday 0 = Sunday, means with 6 decimals.
void write_weekly_csv(std::ostream& out, const Eigen::MatrixXd& means);

} // namespace hourlasso::analysis
