#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "dpcopula/dataset.hpp"

namespace dpcopula {

/// Schema + binning document:
///
///   {"attributes": [
///     {"name": "country", "kind": "categorical", "vocabulary": ["USA", "France"]},
///     {"name": "age", "kind": "continuous",
///      "binning": {"lower": 0, "upper": 120, "edges": [10, 20], "closed": "left"}}]}
AttributeSchema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const AttributeSchema& schema);
AttributeSchema load_schema(const std::filesystem::path& path);
AttributeSchema parse_schema(std::string_view text);

}  // namespace dpcopula
