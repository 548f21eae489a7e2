#include "hourlasso/labels.hpp"

#include "hourlasso/dataio.hpp"

#include <charconv>

namespace hourlasso::models {

std::string RegressorLabel::render() const {
    switch (kind) {
    case Kind::Lag:
        return std::to_string(hour) + "@" + std::to_string(lag);
    case Kind::Weekday:
        return std::string(dataio::weekday_name(weekday));
    case Kind::Intercept:
        return "intercept";
    }
    return {};
}

std::optional<RegressorLabel> RegressorLabel::parse(std::string_view text) {
    if (text == "intercept") return intercept();
    for (int k = 0; k < dataio::kWeekdays; ++k)
        if (text == dataio::weekday_name(k)) return weekday_of(k);
    const auto at = text.find('@');
    if (at == std::string_view::npos) return std::nullopt;
    int h = 0, k = 0;
    const auto hs = text.substr(0, at);
    const auto ks = text.substr(at + 1);
    auto r1 = std::from_chars(hs.data(), hs.data() + hs.size(), h);
    auto r2 = std::from_chars(ks.data(), ks.data() + ks.size(), k);
    if (r1.ec != std::errc{} || r1.ptr != hs.data() + hs.size() || r2.ec != std::errc{} ||
        r2.ptr != ks.data() + ks.size())
        return std::nullopt;
    if (h < 0 || h >= dataio::kHours || k < 1) return std::nullopt;
    return lag_of(h, k);
}

std::vector<std::string> render_all(const std::vector<RegressorLabel>& labels) {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(l.render());
    return out;
}

std::vector<int> LagIndexSet::lags(int h, int l) const {
    std::vector<int> out;
    for (int k = 1; k <= count(h, l); ++k) out.push_back(k);
    return out;
}

} // namespace hourlasso::models
