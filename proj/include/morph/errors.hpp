#pragma once

#include <stdexcept>
#include <string>

namespace morph {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the remaining failure classes the CLI maps onto distinct exit codes.

/// Run configuration failed validation (unknown key, out-of-range value, bad layer id).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required attention-cache entry or style statistic was never recorded.
class MissingCacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file or directory does not exist or cannot be opened.
class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File exists but its contents do not follow the expected format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value appeared in a latent during sampling.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace morph
