#pragma once

#include <stdexcept>
#include <string>

namespace mflab {

// Raised when a requested grid, matrix or LP exceeds the configured size cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when objects that must evolve together are out of sync.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// States leaving the safe region of a grid raise std::domain_error.

}  // namespace mflab
