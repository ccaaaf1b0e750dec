#pragma once

namespace spdekit {

inline constexpr const char* kVersion = "spdekit 0.1.0";

} // namespace spdekit
