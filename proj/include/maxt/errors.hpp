#pragma once

#include <stdexcept>
#include <string>

namespace maxt {

struct NotPsdError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidSigmaError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonconvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGroupError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidKError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MixedDesignError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PartitionMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct JTooLargeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace maxt
