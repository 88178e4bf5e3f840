#pragma once

#include <string>

#include "json.hpp"
#include "magshift/field.hpp"

namespace magshift {

/// Parses and validates a field configuration. Error messages name the JSON
/// path of the offending value (e.g. "bumps[1].profile.nodes[2]").
FieldConfig parse_config(const nlohmann::json &doc);
FieldConfig parse_config_text(const std::string &text);
FieldConfig load_config(const std::string &path);

nlohmann::json config_to_json(const FieldConfig &config);

}  // namespace magshift
