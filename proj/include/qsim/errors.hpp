#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qsim {

// Every library error carries a stable kind name; serve-env puts it on the wire.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(kind + ": " + detail), kind_(std::move(kind)), detail_(detail) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string kind_;
  std::string detail_;
};

#define QSIM_DEFINE_ERROR(Name)                                                \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& detail) : Error(#Name, detail) {}         \
  }

QSIM_DEFINE_ERROR(SchedulingInPast);
QSIM_DEFINE_ERROR(UnknownNodeModel);
QSIM_DEFINE_ERROR(UnsupportedVersion);
QSIM_DEFINE_ERROR(InvalidParams);
QSIM_DEFINE_ERROR(IoError);
QSIM_DEFINE_ERROR(RoundOutOfRange);
QSIM_DEFINE_ERROR(InvalidAction);
QSIM_DEFINE_ERROR(EpisodeOver);
QSIM_DEFINE_ERROR(RewardUndefined);
QSIM_DEFINE_ERROR(DegenerateBounds);
QSIM_DEFINE_ERROR(EpisodeRunning);
QSIM_DEFINE_ERROR(InvalidHyperparameters);
QSIM_DEFINE_ERROR(InvalidConfig);

#undef QSIM_DEFINE_ERROR

/// Malformed OpenQASM input. `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("ParseError", "line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Malformed CSV / policy file content. `line` is 1-based, 0 when not line-specific.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& reason)
      : Error("FormatError", "line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qsim
