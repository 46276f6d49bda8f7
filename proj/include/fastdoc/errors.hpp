// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace fastdoc {

/// Coarse error classes. Each maps to one process exit code in the CLI.
enum class ErrorKind { Config, Data, Numeric, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define FASTDOC_DEFINE_ERROR(Name, Kind)                                          \
  class Name : public Error {                                                     \
   public:                                                                        \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}      \
  };

// Shape / arity violations in tensor code.
FASTDOC_DEFINE_ERROR(DimensionError, Data)
FASTDOC_DEFINE_ERROR(IndexError, Data)
FASTDOC_DEFINE_ERROR(ContractError, Data)

FASTDOC_DEFINE_ERROR(ConfigError, Config)

FASTDOC_DEFINE_ERROR(ParseError, Data)
FASTDOC_DEFINE_ERROR(ValidationError, Data)
FASTDOC_DEFINE_ERROR(EmptyDocumentError, Data)
FASTDOC_DEFINE_ERROR(VocabularyError, Data)
FASTDOC_DEFINE_ERROR(LengthError, Data)
FASTDOC_DEFINE_ERROR(NoNegativeAvailable, Data)
FASTDOC_DEFINE_ERROR(NoPositiveAvailable, Data)
FASTDOC_DEFINE_ERROR(MiningExhausted, Data)
FASTDOC_DEFINE_ERROR(UnmappableCategory, Data)

FASTDOC_DEFINE_ERROR(NumericError, Numeric)

FASTDOC_DEFINE_ERROR(IoError, Io)
FASTDOC_DEFINE_ERROR(CorruptionError, Io)
FASTDOC_DEFINE_ERROR(UnsupportedVersionError, Io)

#undef FASTDOC_DEFINE_ERROR

/// Process exit codes: stable across releases.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Data:
      return 3;
    case ErrorKind::Numeric:
      return 4;
    case ErrorKind::Io:
      return 5;
  }
  return 1;
}

}  // namespace fastdoc
