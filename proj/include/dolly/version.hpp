#pragma once

namespace dolly {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dolly
