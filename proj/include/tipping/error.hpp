#ifndef TIPPING_ERROR_HPP
#define TIPPING_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tipping {

/// Base class of every exception thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: unknown names, missing or out-of-range parameters.
class config_error : public error {
 public:
  using error::error;
};

/// A closed-form expression was evaluated outside its domain (pole, log of a
/// non-positive number, unavailable derivative).
class domain_error : public error {
 public:
  using error::error;
};

/// Integration or root-finding could not produce a trustworthy answer.
class numerical_error : public error {
 public:
  using error::error;
};

/// A frozen limit equation lacks the hyperbolic solutions a computation needs.
class missing_structure_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

/// A classification stayed ambiguous after the horizon was enlarged.
class indeterminate_error : public error {
 public:
  indeterminate_error(const std::string& what, double parameter)
      : error(what), parameter_(parameter) {}

  double parameter() const noexcept { return parameter_; }

 private:
  double parameter_;
};

}  // namespace tipping

#endif  // TIPPING_ERROR_HPP
