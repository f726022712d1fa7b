#pragma once

#include <stdexcept>
#include <string>

namespace valsim {

// Base for every error raised by the library. The CLI maps the concrete
// subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad operator input: unknown model name, malformed filter, missing flag.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Configuration or data files are inconsistent (missing localization,
// missing auth variable, digest mismatch on resume).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A value violated a documented contract (kind mismatch, out-of-range
// rating, malformed transcript, schema violation).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A computation has no defined result for the given input (empty pool,
// constant vector).
class UndefinedResultError : public Error {
 public:
  using Error::Error;
};

// A campaign still has pending or failed cells where a complete one is
// required.
class IncompleteCampaignError : public Error {
 public:
  using Error::Error;
};

}  // namespace valsim
