#pragma once

#include <stdexcept>
#include <string>

namespace msreg {

/// Invalid argument or violated precondition (bad sigma, size mismatch, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, decoded, or written. The message carries the path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}

  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Least-squares fit has too few or degenerate correspondences.
class DegenerateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The registration pipeline could not produce a transform. `stage()` names
/// where it stopped.
class RegistrationError : public std::runtime_error {
 public:
  RegistrationError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace msreg
