// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace swcm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or malformed batch geometry.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced or observed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unregistered identifier.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Token id outside the vocabulary.
class VocabError : public Error {
 public:
  using Error::Error;
};

/// Encoder/decoder depth or layout mismatch while grafting.
class GraftError : public Error {
 public:
  using Error::Error;
};

/// Malformed file (checkpoint, corpus, config syntax).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Loss over zero non-ignored positions.
class EmptyLossError : public Error {
 public:
  EmptyLossError() : Error("empty loss") {}
};

/// Evaluation requested on an empty example set.
class EmptyEvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace swcm
