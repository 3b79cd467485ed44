// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gtpo {

// Indexing is 0-based throughout: completion i in [0, G), position t in
// [0, |o_i|), backward offset r in [0, |o_i|) with r = 0 the last token.

using TokenId = std::int32_t;

/// A token sequence without padding; its size is the valid length.
using TokenSeq = std::vector<TokenId>;

/// Throws kInvalidInput if `seq` is empty or holds an id outside [0, vocab_size).
void validate_tokens(std::span<const TokenId> seq, int vocab_size);

/// One prompt with its G sampled completions and their scalar rewards.
struct CompletionGroup {
  TokenSeq prompt;
  std::vector<TokenSeq> completions;
  std::vector<double> rewards;
  std::optional<std::vector<double>> advantages;

  std::size_t size() const { return completions.size(); }
};

/// Checks G >= 2, matching reward/advantage lengths and non-empty
/// completions. Throws kInvalidGroup.
void validate_group(const CompletionGroup& group);

/// Threshold under which an advantage is treated as exactly zero.
inline constexpr double kZeroAdvantage = 1e-12;

/// Threshold under which the reward standard deviation is degenerate.
inline constexpr double kDegenerateStd = 1e-8;

struct SignPartition {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
  std::vector<std::size_t> zero;
};

/// (R_i - mean R) / std_pop(R). Returns all zeros when std_pop(R) < 1e-8.
/// Throws kInvalidGroup for fewer than two rewards.
std::vector<double> normalize_advantages(std::span<const double> rewards);

/// Convenience: fills group.advantages from group.rewards.
void assign_advantages(CompletionGroup& group);

SignPartition partition_signs(std::span<const double> advantages);

/// True when every advantage is (numerically) zero: the group carries no
/// learning signal.
bool is_degenerate(std::span<const double> advantages);

/// A set of completions sharing their first `prefix_length` tokens.
struct PrefixGroup {
  std::vector<std::size_t> members;
  std::size_t prefix_length = 0;
};

/// For each prefix group, sum over members of A_i / |o_i|: the scalar that
/// multiplies the shared-prefix gradient. Diagnostic only.
/// Throws kInconsistentPrefix if members disagree on the claimed prefix (or
/// are shorter than it) and kInvalidGroup if advantages are missing.
std::vector<double> prefix_gradient_coefficient(const CompletionGroup& group,
                                                std::span<const PrefixGroup> prefix_groups);

/// Partitions completions by their first token and reports, per class, the
/// longest prefix every member shares. Singletons get prefix_length 0.
std::vector<PrefixGroup> shared_prefix_groups(const CompletionGroup& group);

}  // namespace gtpo
