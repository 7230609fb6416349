#pragma once

// JSON mappings for configuration structs. Unknown keys are rejected so a
// typo in a config file fails loudly instead of silently using a default.

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "herdtwin/error.hpp"
#include "herdtwin/lstm.hpp"

namespace herdtwin {

// Throws Error(InvalidConfig) naming the first key outside `allowed`.
void require_known_keys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                        std::string_view context);

nlohmann::ordered_json lstm_config_to_json(const LstmConfig& config);
// Missing keys keep the values already in `config`.
void lstm_config_from_json(const nlohmann::json& object, LstmConfig& config);

}  // namespace herdtwin
