#pragma once

#include <stdexcept>
#include <string>

namespace qrate {

/// Invalid configuration or model-spec schema violation (CLI exit code 2).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured resource cap was exceeded (CLI exit code 4).
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qrate
