#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace phn {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Violated precondition that has no dedicated error class.
struct InvalidArgument : Error {
  using Error::Error;
};

// -- model construction --------------------------------------------------
struct NonStochasticError : Error {
  using Error::Error;
};
struct BadRoutingError : Error {
  using Error::Error;
};
struct SingularError : Error {
  using Error::Error;
};
struct NotPositiveDefiniteError : Error {
  using Error::Error;
};
struct BadEpsilonError : Error {
  using Error::Error;
};
struct DimensionMismatchError : Error {
  using Error::Error;
};
struct IndexOutOfRangeError : Error {
  using Error::Error;
};

// -- sampling ------------------------------------------------------------
struct NonFiniteError : Error {
  NonFiniteError(const std::string& what, std::int64_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_index(step) {}
  std::int64_t step_index;
};
struct BadDeltaError : Error {
  using Error::Error;
};
struct EmptySampleSetError : Error {
  using Error::Error;
};

// -- lyapunov ------------------------------------------------------------
struct Inequality2ViolatedError : Error {
  Inequality2ViolatedError(const std::string& what, double eig)
      : Error(what + " (offending eigenvalue " + std::to_string(eig) + ")"),
        offending_eigenvalue(eig) {}
  double offending_eigenvalue;
};
struct NoValidConstantsError : Error {
  using Error::Error;
};

// -- occupation ----------------------------------------------------------
struct EmptyInputError : Error {
  using Error::Error;
};
struct ResolutionTooCoarseError : Error {
  using Error::Error;
};

// -- stats ---------------------------------------------------------------
struct BadAlphaError : Error {
  using Error::Error;
};
struct SeriesTooShortError : Error {
  using Error::Error;
};

// -- queue ---------------------------------------------------------------
struct ParameterMismatchError : Error {
  using Error::Error;
};

}  // namespace phn
