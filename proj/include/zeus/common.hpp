#pragma once

#include <stdexcept>
#include <string>

namespace zeus {

// Error taxonomy, mirrored by CLI exit codes:
//   UsageError -> 2, NumericError (and GenerationError) -> 3, IoError -> 4.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when the synthetic data generator cannot satisfy its constraints
// (e.g. component placement fails to reach the required separation).
struct GenerationError : NumericError {
  using NumericError::NumericError;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Worker count for the few embarrassingly parallel loops (benchmark runs,
// clustering restarts). ZEUS_THREADS caps it; defaults to the hardware count.
int worker_count();

}  // namespace zeus
