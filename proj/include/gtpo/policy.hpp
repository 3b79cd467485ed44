// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gtpo/group.hpp"
#include "gtpo/numeric.hpp"

namespace gtpo {

/// Order-k n-gram softmax policy: the last k tokens of the history select a
/// row of logits over the vocabulary. Histories shorter than k are padded
/// on the left with a begin symbol. A history holding any id outside
/// [0, V) resolves to a shared default row.
///
/// Rows: (V + 1)^k context rows (the +1 is the begin symbol) followed by the
/// default row. Parameters start at zero, i.e. the uniform policy.
class PolicyTable {
 public:
  PolicyTable(int order, int vocab_size);

  int order() const { return order_; }
  int vocab_size() const { return vocab_size_; }
  std::size_t num_rows() const { return params_.rows(); }
  std::size_t default_row() const { return params_.rows() - 1; }

  /// Row for the context formed by the last `order` tokens of `history`.
  std::size_t context_row(std::span<const TokenId> history) const;

  std::span<const double> row(std::size_t r) const { return params_.row(r); }
  std::span<double> row(std::size_t r) { return params_.row(r); }

  const Matrix& params() const { return params_; }
  Matrix& params() { return params_; }

  bool operator==(const PolicyTable&) const = default;

 private:
  int order_;
  int vocab_size_;
  Matrix params_;
};

/// Logits for the next token given the full history (prompt + completion
/// so far). Deterministic.
std::span<const double> policy_logits(const PolicyTable& policy, std::span<const TokenId> history);

struct SampleOptions {
  std::size_t max_len = 16;
  double temperature = 1.0;
  /// Argmax decoding (lowest id wins ties); the temperature -> 0 limit.
  bool greedy = false;
  std::optional<TokenId> eos;
};

/// One sampled completion with the bookkeeping needed for entropy and
/// gradients: the policy row used at each position and the sampling
/// distribution at the configured temperature.
struct Rollout {
  TokenSeq tokens;
  std::vector<std::size_t> rows;
  std::vector<std::vector<double>> distributions;
};

/// Ancestral sampling until `eos` (included in the completion) or max_len.
/// A pure function of (policy, prompt, options, seed).
Rollout sample_completion(const PolicyTable& policy, const TokenSeq& prompt, const SampleOptions& options,
                          std::uint64_t seed);

struct SampledGroup {
  CompletionGroup group;  // rewards zero-filled, advantages unset
  std::vector<Rollout> rollouts;
};

/// G independent samples; completion i uses a stream derived from (seed, i)
/// so the result does not depend on `threads`. Throws kInvalidInput when
/// G < 2, max_len < 1 or temperature <= 0.
SampledGroup sample_group(const PolicyTable& policy, const TokenSeq& prompt, std::size_t group_size,
                          const SampleOptions& options, std::uint64_t seed, int threads = 1);

/// Scatters per-position logit gradients (rows of `logit_grads`) into a
/// parameter-shaped gradient buffer using the rollout's context rows.
void accumulate_param_grad(const Rollout& rollout, const Matrix& logit_grads, Matrix& param_grad,
                           double scale = 1.0);

/// Logits the policy assigns along an existing rollout, one row per position.
Matrix gather_logits(const PolicyTable& policy, const Rollout& rollout);

// Checkpoints: a versioned text header followed by one line per row; every
// parameter is written as a hexadecimal float so reading back is bit-exact.
//
//   gtpo-policy-checkpoint 1
//   order <k>
//   vocab <V>
//   rows <n>
//   <V hex floats>   (n lines)
inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(const PolicyTable& policy, std::ostream& out);
PolicyTable read_checkpoint(std::istream& in);
void save_checkpoint(const PolicyTable& policy, const std::string& path);
PolicyTable load_checkpoint(const std::string& path);

}  // namespace gtpo
