#include "lowps/errors.hpp"

#include <cstdio>

namespace lowps {

std::string format_point(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.17g, %.17g)", z.real(), z.imag());
  return buf;
}

}  // namespace lowps
