#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prego {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// exit codes through `exit_code()`.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

/// Malformed or inconsistent input data.
class InputError : public Error {
 public:
  using Error::Error;
};

class DuplicateName : public InputError {
 public:
  explicit DuplicateName(const std::string& name)
      : InputError("duplicate action name: '" + name + "'") {}
};

class EmptyName : public InputError {
 public:
  EmptyName() : InputError("action name is empty after trimming") {}
};

class InvalidName : public InputError {
 public:
  explicit InvalidName(const std::string& name)
      : InputError("action name contains a comma or newline: '" + name + "'") {}
};

class PoolExhausted : public InputError {
 public:
  PoolExhausted(std::size_t needed, std::size_t available)
      : InputError("random symbol pool holds " + std::to_string(available) +
                   " symbols, vocabulary needs " + std::to_string(needed)) {}
};

class UnknownAction : public InputError {
 public:
  explicit UnknownAction(long long id)
      : InputError("action id " + std::to_string(id) + " is not in the alphabet") {}
};

class UnknownSymbol : public InputError {
 public:
  explicit UnknownSymbol(const std::string& symbol)
      : InputError("symbol '" + symbol + "' is not in the alphabet"), symbol_(symbol) {}
  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

class IdOutOfRange : public InputError {
 public:
  IdOutOfRange(long long id, std::size_t size)
      : InputError("action id " + std::to_string(id) + " outside [0, " +
                   std::to_string(size) + ")") {}
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& origin, std::size_t line, const std::string& what)
      : InputError(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NonContiguousSteps : public InputError {
 public:
  explicit NonContiguousSteps(const std::string& procedure_id)
      : InputError("procedure '" + procedure_id +
                   "' step_index values are not 0..n-1") {}
};

class UnknownMistakeType : public InputError {
 public:
  explicit UnknownMistakeType(const std::string& type)
      : InputError("unknown or non-procedural mistake_type '" + type + "'") {}
};

class OutOfOrderFrames : public InputError {
 public:
  OutOfOrderFrames(const std::string& video_id, long long frame)
      : InputError("video '" + video_id + "' frame " + std::to_string(frame) +
                   " does not increase") {}
};

class EmptyContext : public InputError {
 public:
  EmptyContext() : InputError("anticipation context holds no actions") {}
};

class UnencodableAction : public InputError {
 public:
  explicit UnencodableAction(long long id)
      : InputError("action id " + std::to_string(id) + " cannot be encoded in the prompt") {}
};

class NoCorrectProcedures : public InputError {
 public:
  NoCorrectProcedures() : InputError("no mistake-free procedures available for training") {}
};

class CyclicGrammar : public InputError {
 public:
  explicit CyclicGrammar(const std::string& task_id)
      : InputError("task '" + task_id + "' dependency graph has a cycle") {}
};

class NoValidInjection : public InputError {
 public:
  using InputError::InputError;
};

/// Verdicts and ground truth cannot be paired up.
class AlignmentMismatch : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// HTTP failure talking to the language-model endpoint (after retries).
class TransportError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class BudgetExceeded : public Error {
 public:
  BudgetExceeded(long long used, long long budget)
      : Error("token budget exhausted: " + std::to_string(used) + " of " +
              std::to_string(budget) + " tokens") {}
  int exit_code() const noexcept override { return 4; }
};

}  // namespace prego
