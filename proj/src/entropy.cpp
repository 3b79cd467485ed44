// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtpo/error.hpp"
#include "gtpo/numeric.hpp"

namespace gtpo {

double shannon_entropy(std::span<const double> p) {
  if (p.empty()) throw Error(ErrorKind::kInvalidDistribution, "empty probability vector");
  double total = 0.0;
  double h = 0.0;
  for (double pj : p) {
    if (!(pj >= 0.0)) throw Error(ErrorKind::kInvalidDistribution, "negative or NaN probability");
    total += pj;
    if (pj > 0.0) h -= pj * std::log(pj);
  }
  if (std::abs(total - 1.0) > kDistributionTolerance) {
    throw Error(ErrorKind::kInvalidDistribution, "probabilities sum to " + std::to_string(total));
  }
  return std::max(h, 0.0);
}

double entropy_of_logits(std::span<const double> logits) {
  // H = lse(f) - sum_j pi_j f_j, evaluated on max-shifted logits.
  const double lse = logsumexp(logits);
  const std::vector<double> pi = softmax(logits);
  double expected = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) expected += pi[j] * logits[j];
  return std::max(lse - expected, 0.0);
}

double mean_completion_entropy(std::span<const std::vector<double>> token_distributions) {
  if (token_distributions.empty()) throw Error(ErrorKind::kInvalidInput, "completion has no positions");
  double acc = 0.0;
  for (const auto& p : token_distributions) acc += shannon_entropy(p);
  return acc / static_cast<double>(token_distributions.size());
}

double probe_initial_entropy(const PolicyTable& policy, std::span<const TokenSeq> prompts,
                             const ProbeOptions& options) {
  if (prompts.empty()) throw Error(ErrorKind::kInvalidInput, "entropy probe needs at least one prompt");
  SampleOptions sample;
  sample.max_len = options.max_len;
  sample.greedy = true;
  sample.temperature = 1.0;
  sample.eos = options.eos;
  double acc = 0.0;
  for (const TokenSeq& prompt : prompts) {
    const Rollout r = sample_completion(policy, prompt, sample, 0);
    acc += mean_completion_entropy(r.distributions);
  }
  return acc / static_cast<double>(prompts.size());
}

int delta_filter(double h_ini, double h_i, double threshold) {
  if (h_ini > threshold) return 1;
  if (h_i > threshold) return 0;
  return 1;
}

double fold_entropy_penalty(double advantage, double h_i, double gamma, int keep) {
  return keep == 1 ? advantage - gamma * h_i : 0.0;
}

double kl_k3(double old_logp, double new_logp) {
  const double d = old_logp - new_logp;
  return std::max(std::expm1(d) - d, 0.0);
}

}  // namespace gtpo
