// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tacdiff {

// Invalid schedule bounds, network shape, corpus or run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Timestep or element index outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed call arguments (shape mismatch, empty input, wrong lengths).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input outside the physical domain of the simulator (pose, character).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A noise predictor returned something that violates its contract.
class ModelContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite network output.
class ModelHealthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or diverging loss during optimization.
class TrainingHealthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File I/O failure; the message carries the offending path.
class PersistenceError : public std::runtime_error {
 public:
  PersistenceError(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace tacdiff
