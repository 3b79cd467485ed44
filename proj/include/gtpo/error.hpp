// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gtpo {

enum class ErrorKind {
  kInvalidGroup,
  kInconsistentPrefix,
  kInvalidDistribution,
  kInvalidInput,
  kMissingReference,
  kShapeMismatch,
  kNonFiniteGradient,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI) can react without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace gtpo
