#ifndef NOISECAL_ERROR_H_
#define NOISECAL_ERROR_H_

#include <stdexcept>

namespace noisecal {

// Invalid configuration or parameter shapes that do not fit the input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's contract (bad index, mismatched cache, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input is well-formed but mathematically degenerate (e.g. a zero vector
// where a direction is required).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed serialized data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The training loop cannot continue (e.g. clustering produced no clusters).
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace noisecal

#endif  // NOISECAL_ERROR_H_
