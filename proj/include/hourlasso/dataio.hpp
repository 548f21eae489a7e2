#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hourlasso::dataio {

inline constexpr int kHours = 24;
inline constexpr int kWeekdays = 7;

using Date = std::chrono::year_month_day;

/// Parses `YYYY-MM-DD`; throws DataError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date date);
Date add_days(Date date, long days);
long days_between(Date from, Date to);

/// Weekday enumeration used throughout: 0 = Sunday, ..., 6 = Saturday.
int weekday_of(Date date);

/// W_k(d): 1 if `date` falls on weekday k, else 0. Throws UsageError for k outside 0..6.
int weekday_indicator(Date date, int k);

/// Three-letter weekday name for k in 0..6 (Sun..Sat).
std::string_view weekday_name(int k);

struct HourlyRecord {
    Date date;
    int hour = 0;  // 0..23, local market time
    double price = 0.0;
};

/// Hourly prices as read from disk, before daylight-saving normalization.
struct RawSeries {
    std::vector<HourlyRecord> records;
};

struct CsvColumns {
    std::string timestamp = "timestamp";
    std::string price = "price";
};

RawSeries parse_raw_csv(std::istream& in, const CsvColumns& columns = {});
RawSeries ingest_csv(const std::filesystem::path& path, const CsvColumns& columns = {});

/// D x 24 matrix of daily price vectors on consecutive calendar days.
class PricePanel {
public:
    PricePanel() = default;
    /// Throws DataError unless `prices` has 24 columns of finite values.
    PricePanel(Date first_date, Eigen::MatrixXd prices);

    Eigen::Index days() const { return prices_.rows(); }
    bool empty() const { return prices_.rows() == 0; }
    const Eigen::MatrixXd& prices() const { return prices_; }
    double operator()(Eigen::Index day, int hour) const { return prices_(day, hour); }

    Date first_date() const { return first_; }
    Date last_date() const { return date(days() - 1); }
    Date date(Eigen::Index day) const;
    std::vector<Date> dates() const;
    int weekday(Eigen::Index day) const;
    std::vector<int> weekdays() const;

    /// Rows [begin, begin + count).
    PricePanel slice(Eigen::Index begin, Eigen::Index count) const;

private:
    Date first_{};
    Eigen::MatrixXd prices_;
};

/// Collapses 23- and 25-hour days at hour 2: spring gap filled with the
/// midpoint of hours 1 and 3, autumn duplicates averaged.
PricePanel dst_normalize(const RawSeries& raw);

struct HourMeans {
    Eigen::VectorXd mu;  // length 24
};

struct Demeaned {
    HourMeans means;
    Eigen::MatrixXd centered;  // window rows x 24
};

/// Column means over rows [begin, begin + count) and the centered slice.
Demeaned demean(const PricePanel& panel, Eigen::Index begin, Eigen::Index count);
inline Demeaned demean(const PricePanel& panel) { return demean(panel, 0, panel.days()); }

/// Locale-independent shortest round-trip formatting of a double.
std::string format_number(double value);

void write_panel_csv(std::ostream& out, const PricePanel& panel);
void write_panel_csv(const std::filesystem::path& path, const PricePanel& panel);
PricePanel read_panel_csv(std::istream& in);

/// Reads either a normalized panel (`date,h00..h23`) or a raw hourly CSV
/// (`timestamp,price`, normalized on the way in), chosen by header.
PricePanel load_panel(const std::filesystem::path& path);

} // namespace hourlasso::dataio
