#pragma once

#include <stdexcept>
#include <string>

namespace hamchain {

// Bad user input: malformed config, inconsistent shapes, invalid parameters.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulation produced a non-finite state.
struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Planner failed to produce a usable demonstration within budget.
struct ExpertFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A bound was requested that needs a constant the model cannot provide.
struct MissingConstant : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A trajectory precondition (e.g. "hits the shrunk target") does not hold.
struct NoHit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hamchain
