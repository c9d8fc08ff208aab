#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace momentswap {

// Base for every error raised by the library. Callers that only care about
// "something in the pipeline went wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: config values, CLI arguments, preconditions on arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A single malformed input row. Carries the source and 1-based line number.
class RowError : public Error {
 public:
  RowError(std::string source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// A whole dataset is unusable (empty file, duplicate keys across files, ...).
class DatasetError : public Error {
 public:
  using Error::Error;
};

class ForwardUnavailable : public Error {
 public:
  using Error::Error;
};

class CurveUnavailable : public Error {
 public:
  using Error::Error;
};

class SurfaceFitError : public Error {
 public:
  SurfaceFitError(std::string constraint, const std::string& what)
      : Error(what + " (constraint: " + constraint + ")"),
        constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

// Not enough observations for the requested statistic.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

class CollinearityError : public Error {
 public:
  using Error::Error;
};

}  // namespace momentswap
