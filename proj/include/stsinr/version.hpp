#pragma once

namespace stsinr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stsinr
