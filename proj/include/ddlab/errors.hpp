#pragma once

#include <stdexcept>
#include <string>

namespace ddlab {

/// Invalid user input: bad configuration, malformed flags, empty interface.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical check failed: non-SPD factor, singular coarse problem,
/// indefinite Krylov operator, projection drift.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace ddlab
