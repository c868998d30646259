#pragma once

namespace cookgen {

// Release number plus `git describe` of the source tree at configure time.
inline const char* version_string() {
#ifdef COOKGEN_VERSION
  return COOKGEN_VERSION;
#else
  return "unknown";
#endif
}

}  // namespace cookgen
