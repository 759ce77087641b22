#pragma once

namespace czta {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace czta
