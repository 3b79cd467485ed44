// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "gtpo/group.hpp"
#include "gtpo/policy.hpp"

namespace gtpo {

// All entropies are in nats.

/// ln 2: mean entropy of a fair binary choice; the default filter threshold.
inline constexpr double kLn2 = std::numbers::ln2;

/// Tolerance on sum(p) == 1 accepted by shannon_entropy.
inline constexpr double kDistributionTolerance = 1e-6;

/// Per-position entropies of one completion and their mean, together with the
/// frozen pre-training reference and the filter threshold.
struct EntropyProfile {
  std::vector<double> per_token;
  double mean = 0.0;
  double initial_reference = 0.0;
  double threshold = kLn2;
};

/// -sum p ln p with 0 ln 0 = 0. Throws kInvalidDistribution for negative
/// entries or a total off 1 by more than 1e-6.
double shannon_entropy(std::span<const double> p);

/// Entropy of softmax(logits), computed without forming log(0).
double entropy_of_logits(std::span<const double> logits);

/// Mean of shannon_entropy over positions. Throws kInvalidInput when empty.
double mean_completion_entropy(std::span<const std::vector<double>> token_distributions);

struct ProbeOptions {
  std::size_t max_len = 16;
  std::optional<TokenId> eos;
};

/// Mean over prompts of the mean per-position entropy of one greedy
/// completion per prompt. Entropies use temperature-1 distributions.
/// Throws kInvalidInput without prompts.
double probe_initial_entropy(const PolicyTable& policy, std::span<const TokenSeq> prompts,
                             const ProbeOptions& options);

/// Completion filter:
///   1 if h_ini > threshold; otherwise 0 if h_i > threshold; otherwise 1.
int delta_filter(double h_ini, double h_i, double threshold = kLn2);

/// advantage - gamma * h_i when keep == 1, else 0. The entropy term of the
/// objective realized as an advantage shift.
double fold_entropy_penalty(double advantage, double h_i, double gamma, int keep);

/// k3 KL estimator e^d - d - 1 with d = old_logp - new_logp. Non-negative;
/// evaluated through expm1 to avoid cancellation near d = 0.
double kl_k3(double old_logp, double new_logp);

}  // namespace gtpo
