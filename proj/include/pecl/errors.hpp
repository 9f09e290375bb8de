#pragma once

#include <stdexcept>
#include <string>

namespace pecl {

/// Base class for all pecl-lab errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ZeroVectorError : Error {
  using Error::Error;
};
struct NonPositiveTemperatureError : Error {
  using Error::Error;
};
struct LengthMismatchError : Error {
  using Error::Error;
};
struct ShapeMismatchError : Error {
  using Error::Error;
};
struct EmptyBatchError : Error {
  using Error::Error;
};
struct MissingEmbeddingsError : Error {
  using Error::Error;
};
struct InvalidPositiveIndexError : Error {
  using Error::Error;
};
struct EmptyPositiveSetError : Error {
  using Error::Error;
};
struct MissingForwardCacheError : Error {
  using Error::Error;
};
struct EmptySplitError : Error {
  using Error::Error;
};
struct CropTooLargeError : Error {
  using Error::Error;
};
struct InvalidConfigError : Error {
  using Error::Error;
};
struct InsufficientLocationsError : Error {
  using Error::Error;
};
struct KTooLargeError : Error {
  using Error::Error;
};
struct ZeroVarianceError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace pecl
