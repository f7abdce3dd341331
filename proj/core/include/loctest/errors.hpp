#ifndef LOCTEST_ERRORS_HPP
#define LOCTEST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace loctest {

/// A symmetric matrix could not be factored (condition estimate above the
/// supported range, or not positive definite after ridging).
class singular_matrix_error : public std::runtime_error {
 public:
  explicit singular_matrix_error(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative procedure ran out of iterations before meeting its tolerance.
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad study configuration or command line input.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input data file. Carries the 1-based line number when known.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace loctest

#endif
