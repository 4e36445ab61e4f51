#pragma once

#include <stdexcept>
#include <string>

namespace co2grey {

// Bad arguments or malformed input data. Maps to CLI exit code 3.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// q_vent == 0 where an equilibrium or time constant is required.
class NoVentilationError : public std::domain_error {
 public:
  NoVentilationError()
      : std::domain_error("no ventilation: steady state is unbounded (q_vent = 0)") {}
};

// sigma == 0 and every Euler-Maruyama residual is exactly zero.
class DegenerateDataError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// No finite log-posterior found at any initialization attempt. Exit code 4.
class PosteriorUnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace co2grey
