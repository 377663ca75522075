#pragma once

#include <stdexcept>
#include <string>

namespace oamturb {

/// Malformed or inconsistent configuration (CLI flags, config files, schemas).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to reach its requested accuracy.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

private:
  double achieved_error_;
};

} // namespace oamturb
