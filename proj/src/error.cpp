#include "qcspec/error.hpp"

namespace qcspec {

void throw_input(const std::string& what) { throw Error(ErrorKind::input, what); }
void throw_estimation(const std::string& what) { throw Error(ErrorKind::estimation, what); }
void throw_consistency(const std::string& what) { throw Error(ErrorKind::consistency, what); }

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::input:
      return 2;
    case ErrorKind::estimation:
      return 3;
    case ErrorKind::consistency:
      return 4;
  }
  return 1;
}

}  // namespace qcspec
