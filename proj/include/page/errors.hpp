#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace page {

// Bad parameters, stepsizes outside their bounds, malformed configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  DimensionError(std::size_t expected, std::size_t got)
      : ValidationError("dimension mismatch: expected " + std::to_string(expected) +
                        ", got " + std::to_string(got)) {}
};

// A non-finite value surfaced from an oracle or from the iteration itself.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(std::uint64_t t, double gamma, const std::string& what)
      : NumericalError("diverged at t=" + std::to_string(t) + " (gamma=" +
                       std::to_string(gamma) + "): " + what),
        t_(t),
        gamma_(gamma) {}

  std::uint64_t iteration() const noexcept { return t_; }
  double gamma() const noexcept { return gamma_; }

 private:
  std::uint64_t t_;
  double gamma_;
};

// An inequality that a problem claims to satisfy was violated on a sample.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact enumeration asked for more outcomes than the guard allows.
class EnumerationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace page
