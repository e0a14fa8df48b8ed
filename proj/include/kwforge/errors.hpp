#pragma once

#include <stdexcept>
#include <string>

namespace kwforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class InvalidTokenError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class InvalidRankError : public Error {
 public:
  using Error::Error;
};

class TargetError : public Error {
 public:
  using Error::Error;
};

class EmptyIndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data files / corpora.
class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

/// A metric whose value is mathematically undefined for the given input.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace kwforge
