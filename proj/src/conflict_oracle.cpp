// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference for build_lambda_weights. Written directly from the
// conflict definitions: for every token of every completion, scan the
// opposite-sign completions for the same token at the same aligned slot.

#include <algorithm>
#include <optional>

#include "gtpo/conflict_mask.hpp"

namespace gtpo {
namespace {

// Token at position t counted from the left.
std::optional<TokenId> from_left(const TokenSeq& seq, std::size_t t) {
  if (t >= seq.size()) return std::nullopt;
  return seq[t];
}

// Token at offset r counted from the right, r = 0 being the last token.
std::optional<TokenId> from_right(const TokenSeq& seq, std::size_t r) {
  if (r >= seq.size()) return std::nullopt;
  return seq[seq.size() - 1 - r];
}

template <typename Access>
bool appears_in(const CompletionGroup& group, const std::vector<std::size_t>& members, std::size_t slot,
                TokenId token, Access access) {
  for (std::size_t j : members) {
    const auto other = access(group.completions[j], slot);
    if (other && *other == token) return true;
  }
  return false;
}

}  // namespace

LambdaWeights oracle_lambda_weights(const CompletionGroup& group, const SignPartition& signs,
                                    OverlapMode overlap) {
  const std::size_t g = group.completions.size();
  LambdaWeights out;
  out.weights.resize(g);
  out.conflict.resize(g);
  out.n_conflict.resize(g);

  for (std::size_t i = 0; i < g; ++i) {
    const TokenSeq& seq = group.completions[i];
    const std::size_t len = seq.size();
    const bool positive = std::find(signs.positive.begin(), signs.positive.end(), i) != signs.positive.end();
    const bool negative = std::find(signs.negative.begin(), signs.negative.end(), i) != signs.negative.end();

    std::vector<bool> fw_mask(len, false);
    std::vector<bool> bw_mask(len, false);
    if (positive || negative) {
      // Forward: scan left to right, stop at the first non-conflict token.
      for (std::size_t t = 0; t < len; ++t) {
        const bool conflict = appears_in(group, signs.positive, t, seq[t], from_left) &&
                              appears_in(group, signs.negative, t, seq[t], from_left);
        if (!conflict) break;
        fw_mask[t] = true;
      }
      // Backward: scan right to left by offset.
      for (std::size_t r = 0; r < len; ++r) {
        const TokenId token = seq[len - 1 - r];
        const bool conflict = appears_in(group, signs.positive, r, token, from_right) &&
                              appears_in(group, signs.negative, r, token, from_right);
        if (!conflict) break;
        bw_mask[len - 1 - r] = true;
      }
    }

    out.weights[i].resize(len);
    out.conflict[i].resize(len);
    int count = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const bool m = fw_mask[t] || bw_mask[t];
      out.conflict[i][t] = m ? 1 : 0;
      if (m) ++count;
      double lambda = 1.0;
      if (overlap == OverlapMode::kUnion) {
        if (m) lambda = positive ? 2.0 : 0.0;
      } else {
        const double fw = fw_mask[t] ? (positive ? 2.0 : 0.0) : 1.0;
        const double bw = bw_mask[t] ? (positive ? 2.0 : 0.0) : 1.0;
        lambda = fw * bw;
      }
      out.weights[i][t] = lambda;
    }
    out.n_conflict[i] = count > 0 ? count : 1;
  }
  return out;
}

}  // namespace gtpo
