#pragma once

#include <stdexcept>
#include <string>

namespace mtsim {

// Invalid parameters, invalid config files, impossible scenario setups.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violations of call contracts (bad patch queries, dimension mismatches).
class DomainError : public std::logic_error {
 public:
  explicit DomainError(const std::string& what) : std::logic_error(what) {}
};

// Faults while a run is in progress (non-finite loss, unreadable model
// files, broken invariants). The CLI maps this to exit code 3.
class RuntimeFault : public std::runtime_error {
 public:
  explicit RuntimeFault(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mtsim
