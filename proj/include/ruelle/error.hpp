#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ruelle {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid inputs: bad measure specs, arity mismatches, schema violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::size_t requested, std::size_t cap)
      : Error(what + " (requested " + std::to_string(requested) + ", cap " + std::to_string(cap) + ")"),
        requested_(requested),
        cap_(cap) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t requested_;
  std::size_t cap_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " + std::to_string(iterations) +
              " iterations)"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace ruelle
