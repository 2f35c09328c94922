// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace longconv {

enum class ErrorKind {
  kParse,          // malformed record in an input file
  kValidation,     // well-formed input that violates a type invariant
  kContract,       // caller or model broke an interface contract
  kUndefinedRate,  // rate with a zero denominator
  kRefusal,        // request outside a documented guard
  kData,           // inputs are individually valid but inconsistent
  kIo,             // file could not be opened, read or written
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message)
      : Error(ErrorKind::kParse, source + ":" + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::kValidation, message) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message) : Error(ErrorKind::kContract, message) {}
};

/// Raised by decoders when a model output breaks the ModelInterface contract.
class ModelContractError : public ContractError {
 public:
  ModelContractError(std::size_t step, const std::string& message)
      : ContractError("model contract violated at step " + std::to_string(step) + ": " + message),
        step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class UndefinedRateError : public Error {
 public:
  explicit UndefinedRateError(const std::string& message)
      : Error(ErrorKind::kUndefinedRate, message) {}
};

class RefusalError : public Error {
 public:
  explicit RefusalError(const std::string& message) : Error(ErrorKind::kRefusal, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorKind::kData, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::kIo, message) {}
};

}  // namespace longconv
