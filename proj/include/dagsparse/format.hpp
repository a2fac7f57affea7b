#pragma once

#include <cmath>
#include <sstream>
#include <string>

namespace dagsparse {

/// Six significant digits, the fixed precision of every numeric output file.
inline std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace dagsparse
