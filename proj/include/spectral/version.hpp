#pragma once

namespace spectral {
inline constexpr const char* kVersion = "0.1.0";
}
