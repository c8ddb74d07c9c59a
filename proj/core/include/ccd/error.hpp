#pragma once

#include <stdexcept>
#include <string>

namespace ccd {

// Single exception type for every contract violation raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccd
