#pragma once

#include <stdexcept>
#include <string>

namespace ptychotomo {

// Invalid experiment/solver configuration, detected before any work starts.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed serialized input (archive, volume, config file, parameter table).
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

}  // namespace ptychotomo
