#pragma once

namespace tcsid {

inline constexpr const char* kVersion = "0.1.0";

} // namespace tcsid
