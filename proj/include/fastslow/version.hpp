#pragma once

namespace fastslow {

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace fastslow
