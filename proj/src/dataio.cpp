#include "hourlasso/dataio.hpp"

#include "hourlasso/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hourlasso::dataio {

namespace {

using std::chrono::sys_days;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_int(std::string_view s, int& value) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    return ec == std::errc{} && ptr == end;
}

bool parse_double(std::string_view s, double& value) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value, std::chars_format::general);
    return ec == std::errc{} && ptr == end;
}

bool try_parse_date(std::string_view s, Date& out) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y = 0, m = 0, d = 0;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) || !parse_int(s.substr(8, 2), d))
        return false;
    out = std::chrono::year{y} / std::chrono::month{static_cast<unsigned>(m)} /
          std::chrono::day{static_cast<unsigned>(d)};
    return out.ok();
}

// `YYYY-MM-DDTHH:00` with optional `:00` seconds.
bool try_parse_timestamp(std::string_view s, Date& date, int& hour) {
    if (s.size() != 16 && s.size() != 19) return false;
    if (!try_parse_date(s.substr(0, 10), date)) return false;
    if (s[10] != 'T' || s[13] != ':') return false;
    if (!parse_int(s.substr(11, 2), hour) || hour < 0 || hour > 23) return false;
    if (s.substr(14, 2) != "00") return false;
    if (s.size() == 19 && (s[16] != ':' || s.substr(17, 2) != "00")) return false;
    return true;
}

std::string line_error(std::size_t line, const std::string& what) {
    return "line " + std::to_string(line) + ": " + what;
}

std::size_t column_index(const std::vector<std::string_view>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw DataError("line 1: missing column '" + name + "' in header");
}

std::string hour_column(int h) {
    std::string s = "h";
    if (h < 10) s += '0';
    s += std::to_string(h);
    return s;
}

} // namespace

Date parse_date(std::string_view text) {
    Date d;
    if (!try_parse_date(trim(text), d)) throw DataError("invalid date '" + std::string(text) + "'");
    return d;
}

std::string format_date(Date date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

Date add_days(Date date, long days) { return Date{sys_days{date} + std::chrono::days{days}}; }

long days_between(Date from, Date to) { return (sys_days{to} - sys_days{from}).count(); }

int weekday_of(Date date) { return static_cast<int>(std::chrono::weekday{sys_days{date}}.c_encoding()); }

int weekday_indicator(Date date, int k) {
    if (k < 0 || k >= kWeekdays) throw UsageError("weekday index must be in 0..6, got " + std::to_string(k));
    return weekday_of(date) == k ? 1 : 0;
}

std::string_view weekday_name(int k) {
    static constexpr std::array<std::string_view, kWeekdays> names{"Sun", "Mon", "Tue", "Wed",
                                                                   "Thu", "Fri", "Sat"};
    if (k < 0 || k >= kWeekdays) throw UsageError("weekday index must be in 0..6");
    return names[static_cast<std::size_t>(k)];
}

RawSeries parse_raw_csv(std::istream& in, const CsvColumns& columns) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("line 1: empty input, expected header");
    const auto header = split_fields(line);
    const std::size_t ts_col = column_index(header, columns.timestamp);
    const std::size_t price_col = column_index(header, columns.price);

    RawSeries raw;
    std::size_t line_no = 1;
    Date dup_day{};
    bool have_dup_day = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw DataError(line_error(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                                    std::to_string(fields.size())));
        HourlyRecord rec;
        if (!try_parse_timestamp(fields[ts_col], rec.date, rec.hour))
            throw DataError(line_error(line_no, "malformed timestamp '" + std::string(fields[ts_col]) +
                                                    "' (expected YYYY-MM-DDTHH:00)"));
        if (!parse_double(fields[price_col], rec.price))
            throw DataError(line_error(line_no, "malformed price '" + std::string(fields[price_col]) + "'"));
        if (!std::isfinite(rec.price))
            throw DataError(line_error(line_no, "non-finite price '" + std::string(fields[price_col]) + "'"));

        if (!raw.records.empty()) {
            const auto& prev = raw.records.back();
            const long gap = days_between(prev.date, rec.date);
            if (gap > 1)
                throw DataError(line_error(line_no, "missing day " + format_date(add_days(prev.date, 1)) + " (" +
                                                        format_date(prev.date) + " is followed by " +
                                                        format_date(rec.date) + ")"));
            if (gap < 0 || (gap == 0 && rec.hour < prev.hour))
                throw DataError(line_error(line_no, "records out of order at " + format_date(rec.date)));
            if (gap == 0 && rec.hour == prev.hour) {
                if (rec.hour != 2)
                    throw DataError(line_error(line_no, "duplicate hour " + std::to_string(rec.hour) + " on " +
                                                            format_date(rec.date)));
                if (have_dup_day && dup_day == rec.date)
                    throw DataError(line_error(line_no, "more than one duplicate hour on " + format_date(rec.date)));
                dup_day = rec.date;
                have_dup_day = true;
            }
        }
        raw.records.push_back(rec);
    }
    return raw;
}

RawSeries ingest_csv(const std::filesystem::path& path, const CsvColumns& columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return parse_raw_csv(in, columns);
}

PricePanel::PricePanel(Date first_date, Eigen::MatrixXd prices) : first_(first_date), prices_(std::move(prices)) {
    if (prices_.cols() != kHours)
        throw DataError("price panel needs 24 columns, got " + std::to_string(prices_.cols()));
    if (!first_.ok() && prices_.rows() > 0) throw DataError("price panel has an invalid first date");
    for (Eigen::Index d = 0; d < prices_.rows(); ++d)
        for (int h = 0; h < kHours; ++h)
            if (!std::isfinite(prices_(d, h)))
                throw DataError("non-finite price on " + format_date(date(d)) + " hour " + std::to_string(h));
}

Date PricePanel::date(Eigen::Index day) const { return add_days(first_, static_cast<long>(day)); }

std::vector<Date> PricePanel::dates() const {
    std::vector<Date> out;
    out.reserve(static_cast<std::size_t>(days()));
    for (Eigen::Index d = 0; d < days(); ++d) out.push_back(date(d));
    return out;
}

int PricePanel::weekday(Eigen::Index day) const { return weekday_of(date(day)); }

std::vector<int> PricePanel::weekdays() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(days()));
    for (Eigen::Index d = 0; d < days(); ++d) out.push_back(weekday(d));
    return out;
}

PricePanel PricePanel::slice(Eigen::Index begin, Eigen::Index count) const {
    if (begin < 0 || count < 0 || begin + count > days())
        throw UsageError("panel slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + std::to_string(days()) + " days");
    return PricePanel(date(begin), prices_.middleRows(begin, count));
}

PricePanel dst_normalize(const RawSeries& raw) {
    const auto& recs = raw.records;
    if (recs.empty()) throw DataError("no hourly records");

    std::vector<std::array<double, kHours>> rows;
    const Date first = recs.front().date;
    std::size_t i = 0;
    while (i < recs.size()) {
        const Date day = recs[i].date;
        std::size_t j = i;
        while (j < recs.size() && recs[j].date == day) ++j;
        const std::size_t count = j - i;
        const auto expected = add_days(first, static_cast<long>(rows.size()));
        if (day != expected)
            throw DataError("dates not consecutive: expected " + format_date(expected) + ", found " +
                            format_date(day));

        std::array<int, kHours + 1> hours{};
        for (std::size_t k = 0; k < count && k <= kHours; ++k) hours[k] = recs[i + k].hour;
        auto hours_match = [&](std::initializer_list<int> skip_or_dup, bool duplicate) {
            // builds the expected hour list for a 23/24/25-hour day and compares
            std::vector<int> want;
            for (int h = 0; h < kHours; ++h) {
                bool special = false;
                for (int s : skip_or_dup) special |= (s == h);
                if (special && !duplicate) continue;
                want.push_back(h);
                if (special && duplicate) want.push_back(h);
            }
            if (want.size() != count) return false;
            for (std::size_t k = 0; k < count; ++k)
                if (hours[k] != want[k]) return false;
            return true;
        };

        std::array<double, kHours> row{};
        if (count == 24) {
            if (!hours_match({}, false))
                throw DataError(format_date(day) + ": 24 records but hours are not 0..23");
            for (int h = 0; h < kHours; ++h) row[static_cast<std::size_t>(h)] = recs[i + static_cast<std::size_t>(h)].price;
        } else if (count == 23) {
            if (!hours_match({2}, false))
                throw DataError(format_date(day) + ": 23-hour day whose missing hour is not hour 2");
            for (std::size_t k = 0; k < count; ++k) row[static_cast<std::size_t>(recs[i + k].hour)] = recs[i + k].price;
            row[2] = 0.5 * (row[1] + row[3]);
        } else if (count == 25) {
            if (!hours_match({2}, true))
                throw DataError(format_date(day) + ": 25-hour day whose repeated hour is not hour 2");
            for (std::size_t k = 0; k < count; ++k) row[static_cast<std::size_t>(recs[i + k].hour)] = recs[i + k].price;
            row[2] = 0.5 * (recs[i + 2].price + recs[i + 3].price);
        } else {
            throw DataError(format_date(day) + ": " + std::to_string(count) + " hourly records (expected 23, 24 or 25)");
        }
        rows.push_back(row);
        i = j;
    }

    Eigen::MatrixXd prices(static_cast<Eigen::Index>(rows.size()), kHours);
    for (std::size_t d = 0; d < rows.size(); ++d)
        for (int h = 0; h < kHours; ++h) prices(static_cast<Eigen::Index>(d), h) = rows[d][static_cast<std::size_t>(h)];
    return PricePanel(first, std::move(prices));
}

Demeaned demean(const PricePanel& panel, Eigen::Index begin, Eigen::Index count) {
    if (count <= 0) throw UsageError("demean needs a non-empty window");
    if (begin < 0 || begin + count > panel.days()) throw UsageError("demean window out of range");
    const auto block = panel.prices().middleRows(begin, count);
    Demeaned out;
    out.means.mu = block.colwise().mean().transpose();
    out.centered = block.rowwise() - out.means.mu.transpose();
    return out;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

void write_panel_csv(std::ostream& out, const PricePanel& panel) {
    out << "date";
    for (int h = 0; h < kHours; ++h) out << ',' << hour_column(h);
    out << '\n';
    for (Eigen::Index d = 0; d < panel.days(); ++d) {
        out << format_date(panel.date(d));
        for (int h = 0; h < kHours; ++h) out << ',' << format_number(panel(d, h));
        out << '\n';
    }
}

void write_panel_csv(const std::filesystem::path& path, const PricePanel& panel) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_panel_csv(out, panel);
}

PricePanel read_panel_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("line 1: empty input, expected header");
    const auto header = split_fields(line);
    if (header.size() != kHours + 1 || header[0] != "date")
        throw DataError("line 1: expected header date,h00,...,h23");
    for (int h = 0; h < kHours; ++h)
        if (header[static_cast<std::size_t>(h) + 1] != hour_column(h))
            throw DataError("line 1: expected column " + hour_column(h));

    std::vector<double> values;
    Date first{};
    Eigen::Index days = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != kHours + 1)
            throw DataError(line_error(line_no, "expected 25 fields, got " + std::to_string(fields.size())));
        Date d;
        if (!try_parse_date(fields[0], d))
            throw DataError(line_error(line_no, "malformed date '" + std::string(fields[0]) + "'"));
        if (days == 0) {
            first = d;
        } else if (d != add_days(first, days)) {
            throw DataError(line_error(line_no, "expected date " + format_date(add_days(first, days)) + ", found " +
                                                    format_date(d)));
        }
        for (int h = 0; h < kHours; ++h) {
            double v = 0.0;
            const auto field = fields[static_cast<std::size_t>(h) + 1];
            if (!parse_double(field, v) || !std::isfinite(v))
                throw DataError(line_error(line_no, "malformed price '" + std::string(field) + "'"));
            values.push_back(v);
        }
        ++days;
    }
    Eigen::MatrixXd prices(days, kHours);
    for (Eigen::Index d = 0; d < days; ++d)
        for (int h = 0; h < kHours; ++h) prices(d, h) = values[static_cast<std::size_t>(d * kHours + h)];
    return PricePanel(first, std::move(prices));
}

PricePanel load_panel(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string header;
    std::getline(in, header);
    in.clear();
    in.seekg(0);
    if (header.rfind("date", 0) == 0) return read_panel_csv(in);
    return dst_normalize(parse_raw_csv(in));
}

} // namespace hourlasso::dataio
