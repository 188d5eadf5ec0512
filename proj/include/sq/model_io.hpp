#pragma once

#include "sq/choice_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace sq {

/// {subcategory_id, kind, feature_names, beta, gamma, smoothing_policy,
///  centering, diagnostics{rows, r2, rmse, condition, rank_warnings, ...}}.
/// An infinite condition estimate is written as null.
nlohmann::json model_to_json(const FittedChoiceModel& model);

/// Inverse of model_to_json; residuals are not part of the document.
FittedChoiceModel model_from_json(const nlohmann::json& doc);

void save_model(const std::filesystem::path& path, const FittedChoiceModel& model);
FittedChoiceModel load_model(const std::filesystem::path& path);

}  // namespace sq
