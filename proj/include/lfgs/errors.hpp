#pragma once

#include <stdexcept>
#include <string>

namespace lfgs {

// Input could not be parsed at all (malformed JSON, bad number, ...).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input parsed but violates a documented requirement.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnknownNode : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingMultiplier : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct KeyMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct RateViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lfgs
