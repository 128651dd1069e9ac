#pragma once

namespace bcrisk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bcrisk
