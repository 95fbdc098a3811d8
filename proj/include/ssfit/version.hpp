#pragma once

namespace ssfit {

inline constexpr const char* kVersion = "ssfit 0.1.0";

}  // namespace ssfit
