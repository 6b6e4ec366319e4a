#pragma once

#include <stdexcept>
#include <string>

namespace ttxai {

// Bad input: a violated precondition, malformed file content or config.
// The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem, subprocess or network failure. The CLI maps it to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An external model (classifier sidecar or LLM endpoint) misbehaved.
class BackendError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace ttxai
