#pragma once

#include <stdexcept>
#include <string>

namespace qrng {

/// Failure classes. The numeric values are the CLI exit codes.
enum class ErrorKind : int {
  validation = 1,
  admissibility = 2,
  io = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
  [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class AdmissibilityError : public Error {
 public:
  explicit AdmissibilityError(const std::string& what) : Error(ErrorKind::admissibility, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace qrng
