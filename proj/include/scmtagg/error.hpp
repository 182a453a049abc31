#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace scmtagg {

enum class ErrorCode {
  ParseError,
  MissingCell,
  DuplicateCell,
  MultipleTreated,
  NoTreated,
  InconsistentTreatment,
  NonFinite,
  T0OutOfRange,
  DimensionMismatch,
  InvalidArgument,
  InsufficientDonors,
  InfeasibleStart,
  NonConvexObjective,
  WeakIdentification,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Identifies one (unit, period, subperiod) cell by its external labels.
struct CellRef {
  std::string unit;
  std::int64_t period = 0;
  std::int64_t subperiod = 0;
};

/// Every failure raised by the library. The code is stable; the message is
/// for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  Error(ErrorCode code, const std::string& message, CellRef cell)
      : Error(code, message) {
    cell_ = std::move(cell);
  }

  static Error at_line(ErrorCode code, std::size_t line, const std::string& message) {
    Error e(code, "line " + std::to_string(line) + ": " + message);
    e.line_ = line;
    return e;
  }

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }
  const std::optional<CellRef>& cell() const noexcept { return cell_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::optional<CellRef> cell_;
  std::optional<std::size_t> line_;
};

}  // namespace scmtagg
