#pragma once

namespace rhfpt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rhfpt
