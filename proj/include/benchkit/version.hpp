#pragma once

namespace benchkit {
inline constexpr const char* kVersion = "0.1.0";
}
