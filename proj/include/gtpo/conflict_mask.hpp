// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gtpo/group.hpp"

namespace gtpo {

/// How forward and backward spans combine where they overlap.
enum class OverlapMode {
  /// Final mask is fw OR bw; lambda in {0, 1, 2}.
  kUnion,
  /// Per-direction weight masks are multiplied, as the reference training
  /// code does. Overlapping positive positions get 4.
  kProduct,
};

/// Per-completion boolean sequences, one byte per position (0 or 1).
using TokenIndicator = std::vector<std::vector<std::uint8_t>>;

/// Per-token lambda weights and conflict bookkeeping for one group.
///
/// weights[i][t] is 1 outside the conflict mask; inside it is 2 for
/// positive-advantage completions and 0 for negative ones (kUnion).
/// Zero-advantage completions keep all-ones weights and an empty mask.
struct LambdaWeights {
  std::vector<std::vector<double>> weights;
  TokenIndicator conflict;
  /// max(1, number of conflict positions); used as a divisor.
  std::vector<int> n_conflict;

  bool operator==(const LambdaWeights&) const = default;
};

/// indicator[i][t] = 1 iff o_{i,t} occurs at position t in at least one
/// positive and at least one negative completion. Zero-advantage completions
/// do not contribute to either presence set but still get an indicator.
TokenIndicator forward_conflict_indicator(const CompletionGroup& group, const SignPartition& signs);

/// Same as the forward indicator with positions counted from the end:
/// offset r = |o_i| - 1 - t, r = 0 being the last token.
TokenIndicator backward_conflict_indicator(const CompletionGroup& group, const SignPartition& signs);

/// Forward span (leading run of the forward indicator) OR backward span
/// (trailing run of the backward indicator), mapped to lambda weights.
LambdaWeights build_lambda_weights(const CompletionGroup& group, const SignPartition& signs,
                                   OverlapMode overlap = OverlapMode::kUnion);

/// Quadratic transcription of the conflict definitions with no presence
/// tables. Must agree bit-for-bit with build_lambda_weights; intended for
/// small groups.
LambdaWeights oracle_lambda_weights(const CompletionGroup& group, const SignPartition& signs,
                                    OverlapMode overlap = OverlapMode::kUnion);

/// Raw (unfloored) conflict counts per completion.
std::vector<int> raw_conflict_counts(const LambdaWeights& weights);

/// Mean over completions of the raw conflict counts.
double conflict_stats(const LambdaWeights& weights);

}  // namespace gtpo
