#pragma once

#include <stdexcept>
#include <string>

namespace qcspec {

/// Failure category. The CLI maps these onto process exit codes
/// (input 2, estimation 3, consistency 4).
enum class ErrorKind { input, estimation, consistency };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_input(const std::string& what);
[[noreturn]] void throw_estimation(const std::string& what);
[[noreturn]] void throw_consistency(const std::string& what);

int exit_code(ErrorKind kind) noexcept;

}  // namespace qcspec
