#pragma once

#include <stdexcept>
#include <string>

namespace lagkit {

// Contract violations throw std::invalid_argument so the CLI and the
// python bindings surface caller errors uniformly.
inline void check(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace lagkit
