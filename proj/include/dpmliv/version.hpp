#pragma once

namespace dpmliv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dpmliv
