// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/error.hpp"

namespace gtpo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidGroup:
      return "invalid-group";
    case ErrorKind::kInconsistentPrefix:
      return "inconsistent-prefix";
    case ErrorKind::kInvalidDistribution:
      return "invalid-distribution";
    case ErrorKind::kInvalidInput:
      return "invalid-input";
    case ErrorKind::kMissingReference:
      return "missing-reference";
    case ErrorKind::kShapeMismatch:
      return "shape-mismatch";
    case ErrorKind::kNonFiniteGradient:
      return "non-finite-gradient";
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace gtpo
