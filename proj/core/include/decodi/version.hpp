#pragma once

namespace decodi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace decodi
