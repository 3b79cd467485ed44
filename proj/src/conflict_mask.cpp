// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/conflict_mask.hpp"

#include <algorithm>
#include <numeric>

namespace gtpo {
namespace {

constexpr std::uint8_t kPos = 1;
constexpr std::uint8_t kNeg = 2;

enum class Align { kLeft, kRight };

// Token at aligned slot s of seq: s is a position (left) or an offset from
// the end (right).
inline TokenId aligned_token(const TokenSeq& seq, std::size_t s, Align align) {
  return align == Align::kLeft ? seq[s] : seq[seq.size() - 1 - s];
}

// Presence table keyed by slot * vocab + token, the same layout as a
// bincount over (position, token) pairs.
struct PresenceTable {
  std::size_t vocab = 0;
  std::vector<std::uint8_t> flags;

  std::uint8_t at(std::size_t slot, TokenId token) const {
    return flags[slot * vocab + static_cast<std::size_t>(token)];
  }
};

PresenceTable build_presence(const CompletionGroup& group, const SignPartition& signs, Align align) {
  std::size_t max_len = 0;
  TokenId max_id = 0;
  for (const TokenSeq& seq : group.completions) {
    max_len = std::max(max_len, seq.size());
    for (TokenId id : seq) max_id = std::max(max_id, id);
  }
  PresenceTable table;
  table.vocab = static_cast<std::size_t>(max_id) + 1;
  table.flags.assign(max_len * table.vocab, 0);
  auto mark = [&](const std::vector<std::size_t>& members, std::uint8_t bit) {
    for (std::size_t i : members) {
      const TokenSeq& seq = group.completions[i];
      for (std::size_t s = 0; s < seq.size(); ++s) {
        table.flags[s * table.vocab + static_cast<std::size_t>(aligned_token(seq, s, align))] |= bit;
      }
    }
  };
  mark(signs.positive, kPos);
  mark(signs.negative, kNeg);
  return table;
}

TokenIndicator indicator(const CompletionGroup& group, const SignPartition& signs, Align align) {
  const PresenceTable table = build_presence(group, signs, align);
  TokenIndicator out(group.completions.size());
  for (std::size_t i = 0; i < group.completions.size(); ++i) {
    const TokenSeq& seq = group.completions[i];
    out[i].assign(seq.size(), 0);
    for (std::size_t s = 0; s < seq.size(); ++s) {
      const bool hit = table.at(s, aligned_token(seq, s, align)) == (kPos | kNeg);
      const std::size_t t = align == Align::kLeft ? s : seq.size() - 1 - s;
      out[i][t] = hit ? 1 : 0;
    }
  }
  return out;
}

std::vector<std::int8_t> completion_signs(std::size_t g, const SignPartition& signs) {
  std::vector<std::int8_t> sign(g, 0);
  for (std::size_t i : signs.positive) sign[i] = 1;
  for (std::size_t i : signs.negative) sign[i] = -1;
  return sign;
}

}  // namespace

TokenIndicator forward_conflict_indicator(const CompletionGroup& group, const SignPartition& signs) {
  return indicator(group, signs, Align::kLeft);
}

TokenIndicator backward_conflict_indicator(const CompletionGroup& group, const SignPartition& signs) {
  return indicator(group, signs, Align::kRight);
}

LambdaWeights build_lambda_weights(const CompletionGroup& group, const SignPartition& signs,
                                   OverlapMode overlap) {
  const std::size_t g = group.completions.size();
  const auto sign = completion_signs(g, signs);
  const TokenIndicator fwd = forward_conflict_indicator(group, signs);
  const TokenIndicator bwd = backward_conflict_indicator(group, signs);

  LambdaWeights out;
  out.weights.resize(g);
  out.conflict.resize(g);
  out.n_conflict.assign(g, 1);
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t len = group.completions[i].size();
    out.weights[i].assign(len, 1.0);
    out.conflict[i].assign(len, 0);
    if (sign[i] == 0) continue;

    // Cumulative AND from each end.
    std::size_t fwd_span = 0;
    while (fwd_span < len && fwd[i][fwd_span]) ++fwd_span;
    std::size_t bwd_span = 0;
    while (bwd_span < len && bwd[i][len - 1 - bwd_span]) ++bwd_span;

    const double on_conflict = sign[i] > 0 ? 2.0 : 0.0;
    int count = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const bool in_fwd = t < fwd_span;
      const bool in_bwd = t >= len - bwd_span;
      if (!in_fwd && !in_bwd) continue;
      out.conflict[i][t] = 1;
      ++count;
      if (overlap == OverlapMode::kUnion) {
        out.weights[i][t] = on_conflict;
      } else {
        out.weights[i][t] = (in_fwd ? on_conflict : 1.0) * (in_bwd ? on_conflict : 1.0);
      }
    }
    out.n_conflict[i] = std::max(1, count);
  }
  return out;
}

std::vector<int> raw_conflict_counts(const LambdaWeights& weights) {
  std::vector<int> counts;
  counts.reserve(weights.conflict.size());
  for (const auto& row : weights.conflict) counts.push_back(std::accumulate(row.begin(), row.end(), 0));
  return counts;
}

double conflict_stats(const LambdaWeights& weights) {
  if (weights.conflict.empty()) return 0.0;
  const auto counts = raw_conflict_counts(weights);
  double total = 0.0;
  for (int c : counts) total += c;
  return total / static_cast<double>(counts.size());
}

}  // namespace gtpo
