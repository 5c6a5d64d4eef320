#pragma once

namespace radarsim {
inline constexpr const char* kVersion = "0.1.0";
}
