#pragma once

namespace forcegp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace forcegp
