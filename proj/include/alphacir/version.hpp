#pragma once

namespace alphacir {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace alphacir
