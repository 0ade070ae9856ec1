#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace s2m {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A point or query fell outside the domain (bbox) of a grid.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// Too few points, or all points coplanar.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// A transport-plan row carries no mass, so its displacement is undefined.
class DegenerateRow : public Error {
 public:
  DegenerateRow(std::size_t row, const std::string& what)
      : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace s2m
