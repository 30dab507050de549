#ifndef PLUGSMC_ERRORS_HPP
#define PLUGSMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace plugsmc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  /// Short machine-readable tag, used by the CLI error line.
  virtual const char* kind() const noexcept { return "error"; }
};

/// All weights of a particle population are zero.
class ParticleCollapse : public Error {
 public:
  explicit ParticleCollapse(int t, const std::string& where = "particle population")
      : Error(where + " collapsed (all weights zero) at t=" + std::to_string(t)), t_(t) {}
  int time() const noexcept { return t_; }
  const char* kind() const noexcept override { return "particle_collapse"; }

 private:
  int t_;
};

class InvalidWeight : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_weight"; }
};

/// A documented precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract_violation"; }
};

class IntegratorDivergence : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "integrator_divergence"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

class Unsupported : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsupported"; }
};

/// ABC produced no acceptance within its attempt budget.
class ToleranceTooTight : public Error {
 public:
  ToleranceTooTight(double smallest_distance, long attempts)
      : Error("tolerance too tight: no acceptance in " + std::to_string(attempts) +
              " attempts, smallest distance " + std::to_string(smallest_distance)),
        smallest_distance_(smallest_distance) {}
  double smallest_distance() const noexcept { return smallest_distance_; }
  const char* kind() const noexcept override { return "tolerance_too_tight"; }

 private:
  double smallest_distance_;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// Invalid configuration; carries the offending key.
class UsageError : public Error {
 public:
  UsageError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }
  const char* kind() const noexcept override { return "usage"; }

 private:
  std::string key_;
};

}  // namespace plugsmc

#endif  // PLUGSMC_ERRORS_HPP
