#include "fluctsel/core/log_density.hpp"

namespace fluctsel {

std::vector<std::string> LogDensity::names() const {
  std::vector<std::string> n;
  for (std::size_t i = 0; i < dim(); ++i) n.push_back("x" + std::to_string(i));
  return n;
}

}  // namespace fluctsel
