// Copyright 2026 The Explore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXPLORE_ERRORS_HPP
#define EXPLORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace explore {

/// A precondition of an operation was not met by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A value lies outside the domain where a quantity is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The chain could not find a starting state for which the outcome holds.
class InitializationError : public std::runtime_error {
 public:
  InitializationError(const std::string& what, std::size_t budget)
      : std::runtime_error(what), budget_(budget) {}

  [[nodiscard]] std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t budget_;
};

/// Kernel density fitting failed (too few samples, zero variance).
class KdeFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generic numerical failure (degenerate tree height, non-finite values).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An external simulator exited abnormally, timed out or broke the line protocol.
class SimulatorError : public std::runtime_error {
 public:
  SimulatorError(const std::string& what, std::string captured_stdout, std::string captured_stderr)
      : std::runtime_error(what),
        stdout_(std::move(captured_stdout)),
        stderr_(std::move(captured_stderr)) {}

  explicit SimulatorError(const std::string& what) : std::runtime_error(what) {}

  [[nodiscard]] const std::string& captured_stdout() const noexcept { return stdout_; }
  [[nodiscard]] const std::string& captured_stderr() const noexcept { return stderr_; }

 private:
  std::string stdout_;
  std::string stderr_;
};

/// Experiment configuration is malformed.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace explore

#endif
