#pragma once

#include <map>
#include <string>

#include "segreward/train.hpp"

namespace segreward {

/// key=value configuration text ('#' comments and blank lines ignored).
/// Unknown keys raise InvalidConfigError naming the key.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

/// Round-trip: every effective key, suitable for manifests and replay.
std::map<std::string, std::string> config_to_map(const TrainConfig& config);
std::string config_to_text(const TrainConfig& config);

/// Applies one key=value override (the CLI's --seed / --steps flags).
void apply_override(TrainConfig& config, const std::string& key, const std::string& value);

}  // namespace segreward
