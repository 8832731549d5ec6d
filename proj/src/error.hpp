#pragma once

#include <stdexcept>
#include <string>

namespace lapseg {

// Error taxonomy mirrored by the CLI exit codes and the C API status codes:
// Config/Shape/Contract -> 2, Data/Io -> 3, Audit -> 4.
enum class ErrorKind {
  Config,
  Shape,
  Contract,
  Data,
  Io,
  Audit,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error(ErrorKind::Shape, m) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& m) : Error(ErrorKind::Contract, m) {}
};
struct DataError : Error {
  explicit DataError(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};
struct AuditError : Error {
  explicit AuditError(const std::string& m) : Error(ErrorKind::Audit, m) {}
};

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Shape:
    case ErrorKind::Contract:
      return 2;
    case ErrorKind::Data:
    case ErrorKind::Io:
      return 3;
    case ErrorKind::Audit:
      return 4;
  }
  return 1;
}

}  // namespace lapseg
