// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gtpo/conflict_mask.hpp"
#include "gtpo/group.hpp"
#include "gtpo/numeric.hpp"

namespace gtpo {

// Sign convention: every loss here is minimized and equals the negated
// objective. Gradients are taken with respect to the logits, single-iteration
// (ratio pi/pi_old == 1 in value, carrying the gradient of log pi).

/// One |o_i| x V logit matrix per completion; row t scores token o_{i,t}.
using LogitsTensor = std::vector<Matrix>;

struct LossReport {
  double value = 0.0;
  LogitsTensor grad;
  /// Mean k3 KL against the reference logits over all tokens (0 without a reference).
  double mean_kl = 0.0;
  std::size_t n_tokens = 0;
};

/// f_j - logsumexp(f).
double log_softmax_prob(std::span<const double> logits, TokenId chosen);

/// d log softmax(f)_j / df: (1 - pi_j) at j and -pi_k elsewhere.
std::vector<double> logprob_grad_wrt_logits(std::span<const double> logits, TokenId chosen);

enum class KlEstimator {
  /// Per token e^d - d - 1 with d = ref_logp - logp of the chosen token.
  kK3,
  /// Per position sum_k pi_ref,k ln(pi_ref,k / pi_k).
  kExact,
};

struct GrpoOptions {
  double beta = 0.0;
  KlEstimator kl = KlEstimator::kK3;
};

/// GRPO baseline:
///   loss = -(1/G) sum_i (A_i/|o_i|) sum_t ratio_{i,t} + beta * (1/G) sum_i (1/|o_i|) sum_t KL_{i,t}
/// The advantage part of the value is (1/G) sum_i A_i, i.e. zero for
/// normalized advantages, while its gradient is not.
/// Throws kMissingReference when beta > 0 and ref_logits is null.
LossReport grpo_loss_and_grad(const CompletionGroup& group, const LogitsTensor& logits,
                              std::span<const double> advantages, const GrpoOptions& options,
                              const LogitsTensor* ref_logits = nullptr);

enum class Normalization {
  /// Divide each completion's token sum by |o_i|.
  kPerLength,
  /// Additionally divide by n_conflict (clamped to 1), as the reference code does.
  kCodeFaithful,
};

enum class EntropyTerm {
  /// Entropy already folded into the advantages by the caller; no entropy gradient.
  kAdvantageShift,
  /// Adds gamma * (1/G) sum_i keep_i <H>_i to the loss with its gradient.
  kDifferentiable,
};

struct GtpoOptions {
  Normalization normalization = Normalization::kPerLength;
  EntropyTerm entropy_term = EntropyTerm::kAdvantageShift;
  double gamma = 0.0;
  /// Per-completion filter used by the differentiable entropy term; empty
  /// means keep every completion.
  std::vector<int> keep;
};

/// GTPO token-level loss:
///   loss = -(1/G) sum_i (A_i/|o_i|) sum_t lambda_{i,t} ratio_{i,t}   [/ n_conflict_i]
/// `advantages` must already be filtered and entropy-folded. ref_logits, if
/// given, only feeds the KL monitor. Throws kShapeMismatch when lambda or
/// logits disagree with the completions.
LossReport gtpo_loss_and_grad(const CompletionGroup& group, const LogitsTensor& logits,
                              const LambdaWeights& lambda, std::span<const double> advantages,
                              const GtpoOptions& options = {}, const LogitsTensor* ref_logits = nullptr);

/// Per-logit components (A/|o|) * [(1 - pi_j) at j, -pi_k at k != j] of the
/// ascent direction for a single token whose most likely entry j was chosen.
/// With A < 0 and pi_j near 1 this is the sharp penalty on the confident
/// token and the small boost to every alternative.
std::vector<double> collapse_case_expansion(std::span<const double> pi, double advantage, std::size_t length);

}  // namespace gtpo
