#pragma once

namespace xlp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace xlp
