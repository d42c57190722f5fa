#pragma once

namespace marginlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace marginlab
