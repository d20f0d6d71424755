#pragma once

namespace qbrolin {

inline constexpr const char* kLibraryName = "qbrolin";
inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace qbrolin
