#pragma once

#define DEPTHSYNTH_VERSION "0.1.0"

namespace depthsynth {
inline constexpr const char* kVersion = DEPTHSYNTH_VERSION;
}
