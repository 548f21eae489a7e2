#include "hourlasso/model_io.hpp"

#include "hourlasso/errors.hpp"

#include <fstream>

namespace hourlasso::models {

using dataio::kHours;
using dataio::kWeekdays;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

json vec(const VectorXd& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json mat(const MatrixXd& m) {
    json out = json::array();
    for (Index r = 0; r < m.rows(); ++r) out.push_back(vec(m.row(r).transpose()));
    return out;
}

VectorXd read_vec(const json& j) {
    if (!j.is_array()) throw DataError("model dump: expected an array");
    VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

MatrixXd read_mat(const json& j) {
    if (!j.is_array()) throw DataError("model dump: expected a matrix");
    if (j.empty()) return {};
    MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(j[0].size()));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const VectorXd row = read_vec(j[r]);
        if (row.size() != m.cols()) throw DataError("model dump: ragged matrix");
        m.row(static_cast<Index>(r)) = row.transpose();
    }
    return m;
}

json coefficient(const RegressorLabel& label, double value) {
    return {{"label", label.render()}, {"value", value}};
}

RegressorLabel read_label(const json& j) {
    const auto text = j.at("label").get<std::string>();
    const auto label = RegressorLabel::parse(text);
    if (!label) throw DataError("model dump: bad coefficient label '" + text + "'");
    return *label;
}

json ar_json(const estim::ARFit& f) {
    return {{"p", f.order}, {"intercept", f.intercept}, {"innovation_variance", f.innovation_variance}};
}

estim::ARFit read_ar(const json& j, VectorXd phi) {
    estim::ARFit f;
    f.order = j.at("p").get<int>();
    f.intercept = j.at("intercept").get<double>();
    f.innovation_variance = j.at("innovation_variance").get<double>();
    if (phi.size() != f.order) throw DataError("model dump: AR order does not match its coefficients");
    f.phi = std::move(phi);
    return f;
}

struct Dumper {
    json& hours;
    json& extras;

    void operator()(const LassoState& s) const {
        for (int h = 0; h < kHours; ++h) {
            const auto& hour = s.hours[static_cast<std::size_t>(h)];
            json coefs = json::array();
            for (std::size_t j = 0; j < hour.labels.size(); ++j)
                coefs.push_back(coefficient(hour.labels[j], hour.coefficients(static_cast<Index>(j))));
            hours.push_back({{"h", h}, {"coefficients", coefs}, {"standardized", vec(hour.standardized)},
                             {"lambda", hour.lambda}});
        }
    }

    void operator()(const DailyArState& s) const {
        const bool wd = s.weekday_effects.size() > 0;
        for (int h = 0; h < kHours; ++h) {
            const auto& f = s.hours[static_cast<std::size_t>(h)];
            json coefs = json::array();
            for (int k = 1; k <= f.order; ++k) coefs.push_back(coefficient(RegressorLabel::lag_of(h, k), f.phi(k - 1)));
            if (wd)
                for (int k = 0; k < kWeekdays; ++k)
                    coefs.push_back(coefficient(RegressorLabel::weekday_of(k), s.weekday_effects(k, h)));
            json entry = ar_json(f);
            entry["h"] = h;
            entry["coefficients"] = coefs;
            hours.push_back(entry);
        }
        extras["weekdays"] = wd;
    }

    void operator()(const ExpertState& s) const {
        for (int h = 0; h < kHours; ++h) {
            const auto& e = s.hours[static_cast<std::size_t>(h)];
            json coefs = json::array({coefficient(RegressorLabel::intercept(), e.intercept)});
            for (std::size_t j = 0; j < e.labels.size(); ++j)
                coefs.push_back(coefficient(e.labels[j], e.coefficients(static_cast<Index>(j))));
            hours.push_back({{"h", h}, {"coefficients", coefs}});
        }
    }

    void operator()(const HourlyArState& s) const {
        extras = ar_json(s.fit);
        extras["phi"] = vec(s.fit.phi);
        extras["psi"] = s.weekday_effects.size() > 0 ? vec(s.weekday_effects) : json(nullptr);
    }

    void operator()(const PcaState& s) const {
        json phi = json::array();
        for (const auto& m : s.var.phi) phi.push_back(mat(m));
        extras = {{"K", s.factor_count},
                  {"loadings", mat(s.factors.loadings)},
                  {"eigenvalues", vec(s.factors.eigenvalues)},
                  {"means", vec(s.factors.column_means)},
                  {"p", s.var.order},
                  {"var_intercept", vec(s.var.intercept)},
                  {"var_phi", phi},
                  {"innovation_covariance", mat(s.var.innovation_covariance)},
                  {"aic", s.var.aic},
                  {"psi", s.weekday_effects.size() > 0 ? mat(s.weekday_effects) : json(nullptr)}};
    }
};

const json& hour_entry(const json& hours, int h) {
    if (!hours.is_array() || hours.size() != static_cast<std::size_t>(kHours))
        throw DataError("model dump: expected 24 hour entries");
    const json& entry = hours[static_cast<std::size_t>(h)];
    if (entry.at("h").get<int>() != h) throw DataError("model dump: hour entries out of order");
    return entry;
}

ModelState read_state(const FamilySpec& family, const json& hours, const json& extras) {
    switch (family.family) {
    case Family::Lasso: {
        LassoState s;
        for (int h = 0; h < kHours; ++h) {
            const json& entry = hour_entry(hours, h);
            LassoHour hour;
            const json& coefs = entry.at("coefficients");
            hour.coefficients.resize(static_cast<Index>(coefs.size()));
            for (std::size_t j = 0; j < coefs.size(); ++j) {
                hour.labels.push_back(read_label(coefs[j]));
                hour.coefficients(static_cast<Index>(j)) = coefs[j].at("value").get<double>();
            }
            hour.standardized = read_vec(entry.at("standardized"));
            if (hour.standardized.size() != hour.coefficients.size())
                throw DataError("model dump: standardized coefficients misaligned at hour " + std::to_string(h));
            hour.lambda = entry.at("lambda").get<double>();
            s.hours.push_back(std::move(hour));
        }
        return s;
    }
    case Family::DailyAR: {
        DailyArState s;
        if (family.weekdays) s.weekday_effects = MatrixXd::Zero(kWeekdays, kHours);
        for (int h = 0; h < kHours; ++h) {
            const json& entry = hour_entry(hours, h);
            std::vector<double> phi;
            for (const json& c : entry.at("coefficients")) {
                const auto label = read_label(c);
                const double value = c.at("value").get<double>();
                if (label.kind == RegressorLabel::Kind::Weekday && family.weekdays)
                    s.weekday_effects(label.weekday, h) = value;
                else if (label.kind == RegressorLabel::Kind::Lag && label.hour == h &&
                         label.lag == static_cast<int>(phi.size()) + 1)
                    phi.push_back(value);
                else
                    throw DataError("model dump: unexpected coefficient " + label.render() + " at hour " +
                                    std::to_string(h));
            }
            s.hours.push_back(read_ar(entry, Eigen::Map<const VectorXd>(phi.data(), static_cast<Index>(phi.size()))));
        }
        return s;
    }
    case Family::Expert: {
        ExpertState s;
        for (int h = 0; h < kHours; ++h) {
            const json& coefs = hour_entry(hours, h).at("coefficients");
            ExpertHour e;
            std::vector<double> values;
            for (const json& c : coefs) {
                const auto label = read_label(c);
                const double value = c.at("value").get<double>();
                if (label.kind == RegressorLabel::Kind::Intercept) {
                    e.intercept = value;
                } else {
                    e.labels.push_back(label);
                    values.push_back(value);
                }
            }
            e.coefficients = Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
            s.hours.push_back(std::move(e));
        }
        return s;
    }
    case Family::HourlyAR: {
        HourlyArState s;
        s.fit = read_ar(extras, read_vec(extras.at("phi")));
        if (!extras.at("psi").is_null()) s.weekday_effects = read_vec(extras.at("psi"));
        return s;
    }
    case Family::Pca: {
        PcaState s;
        s.factor_count = extras.at("K").get<int>();
        s.factors.loadings = read_mat(extras.at("loadings"));
        s.factors.eigenvalues = read_vec(extras.at("eigenvalues"));
        s.factors.column_means = read_vec(extras.at("means"));
        s.var.dimension = s.factor_count;
        s.var.order = extras.at("p").get<int>();
        s.var.intercept = read_vec(extras.at("var_intercept"));
        for (const json& m : extras.at("var_phi")) s.var.phi.push_back(read_mat(m));
        s.var.innovation_covariance = read_mat(extras.at("innovation_covariance"));
        s.var.aic = extras.at("aic").get<std::vector<double>>();
        if (!extras.at("psi").is_null()) s.weekday_effects = read_mat(extras.at("psi"));
        if (s.factors.loadings.rows() != kHours || s.factors.loadings.cols() != kHours ||
            static_cast<int>(s.var.phi.size()) != s.var.order || s.var.intercept.size() != s.factor_count)
            throw DataError("model dump: inconsistent PCA state");
        return s;
    }
    }
    throw DataError("model dump: unknown family");
}

} // namespace

json to_json(const FittedForecaster& model) {
    json hours = json::array();
    json extras = json::object();
    std::visit(Dumper{hours, extras}, model.state);
    return {{"family", model.family.name()},
            {"window_start", dataio::format_date(model.window_start)},
            {"window_end", dataio::format_date(model.window_end)},
            {"mu", vec(model.mu.mu)},
            {"hours", hours},
            {"extras", extras}};
}

FittedForecaster from_json(const json& dump) {
    try {
        FittedForecaster m;
        try {
            m.family = FamilySpec::parse(dump.at("family").get<std::string>());
        } catch (const UsageError& e) {
            throw DataError(std::string("model dump: ") + e.what());
        }
        m.window_start = dataio::parse_date(dump.at("window_start").get<std::string>());
        m.window_end = dataio::parse_date(dump.at("window_end").get<std::string>());
        m.mu.mu = read_vec(dump.at("mu"));
        if (m.mu.mu.size() != kHours) throw DataError("model dump: mu must have 24 entries");
        m.state = read_state(m.family, dump.at("hours"), dump.at("extras"));
        if (m.family.family == Family::Pca) m.family.pca_factors = std::get<PcaState>(m.state).factor_count;
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model dump: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const FittedForecaster& model) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json(model).dump(2) << '\n';
}

FittedForecaster load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    json dump;
    try {
        in >> dump;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return from_json(dump);
}

} // namespace hourlasso::models
