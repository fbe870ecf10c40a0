#pragma once

#include <stdexcept>
#include <string>

namespace mpexp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  enum class Kind { header, syntax, index_out_of_range, unsupported, truncated };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class FetchError : public Error {
 public:
  enum class Kind { network, unknown_name, extract, io };

  FetchError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// A non-finite value appeared in a product computed at `format`.
class OverflowError : public Error {
 public:
  OverflowError(std::string format, const std::string& what) : Error(what), format_(std::move(format)) {}
  const std::string& format() const { return format_; }

 private:
  std::string format_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(double achieved, const std::string& what) : Error(what), achieved_(achieved) {}
  /// Best local error estimate reached before giving up.
  double achieved_error() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace mpexp
