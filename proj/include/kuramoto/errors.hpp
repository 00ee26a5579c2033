#pragma once

#include <stdexcept>
#include <string>

namespace kuramoto {

/// Input outside the domain where a quantity is defined (bad parameters,
/// evaluation points outside a strip of analyticity, malformed tables).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to reach its tolerance. Carries the best
/// value that was achieved so callers can report it.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  explicit numeric_error(const std::string& what)
      : std::runtime_error(what), achieved_(0.0) {}

  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// The dispersion function vanishes (to tolerance) on a contour or the
/// coupling sits on the boundary curve.
class degenerate_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

/// Command-line or configuration misuse.
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace kuramoto
