#pragma once

namespace segreward {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace segreward
