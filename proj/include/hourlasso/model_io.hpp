#pragma once

#include "hourlasso/models.hpp"

#include <json.hpp>

#include <filesystem>

namespace hourlasso::models {

/// {family, window_start, window_end, mu[24], hours:[{h, coefficients:[{label, value}]}], extras}
nlohmann::json to_json(const FittedForecaster& model);

/// Inverse of to_json; throws DataError on malformed dumps.
FittedForecaster from_json(const nlohmann::json& dump);

void save_model(const std::filesystem::path& path, const FittedForecaster& model);
FittedForecaster load_model(const std::filesystem::path& path);

} // namespace hourlasso::models
