#pragma once

namespace mdlan {

inline constexpr const char* version = "0.1.0";

}  // namespace mdlan
