// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "gtpo/error.hpp"
#include "gtpo/kernels.hpp"
#include "gtpo/rng.hpp"

namespace gtpo {
namespace {

constexpr std::size_t kMaxParams = std::size_t{1} << 28;

std::size_t context_row_count(int order, int vocab_size) {
  if (order < 1) throw Error(ErrorKind::kConfig, "policy order must be >= 1");
  if (vocab_size < 2) throw Error(ErrorKind::kConfig, "vocabulary must hold at least 2 tokens");
  std::size_t rows = 1;
  for (int i = 0; i < order; ++i) {
    rows *= static_cast<std::size_t>(vocab_size) + 1;
    if (rows * static_cast<std::size_t>(vocab_size) > kMaxParams) {
      throw Error(ErrorKind::kConfig, "policy table too large for order " + std::to_string(order) +
                                          " and vocabulary " + std::to_string(vocab_size));
    }
  }
  return rows;
}

std::size_t pick(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    acc += probs[j];
    if (u < acc) return j;
  }
  // Rounding left u above the running total; return the last non-zero entry.
  for (std::size_t j = probs.size(); j-- > 0;)
    if (probs[j] > 0.0) return j;
  return probs.size() - 1;
}

}  // namespace

PolicyTable::PolicyTable(int order, int vocab_size)
    : order_(order),
      vocab_size_(vocab_size),
      params_(context_row_count(order, vocab_size) + 1, static_cast<std::size_t>(vocab_size), 0.0) {}

std::size_t PolicyTable::context_row(std::span<const TokenId> history) const {
  const std::size_t base = static_cast<std::size_t>(vocab_size_) + 1;
  const std::size_t begin_symbol = static_cast<std::size_t>(vocab_size_);
  std::size_t row = 0;
  const std::size_t k = static_cast<std::size_t>(order_);
  for (std::size_t slot = 0; slot < k; ++slot) {
    // slot 0 is the oldest token of the window.
    const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(history.size()) - static_cast<std::ptrdiff_t>(k) +
                               static_cast<std::ptrdiff_t>(slot);
    std::size_t digit = begin_symbol;
    if (idx >= 0) {
      const TokenId id = history[static_cast<std::size_t>(idx)];
      if (id < 0 || id >= vocab_size_) return default_row();
      digit = static_cast<std::size_t>(id);
    }
    row = row * base + digit;
  }
  return row;
}

std::span<const double> policy_logits(const PolicyTable& policy, std::span<const TokenId> history) {
  return policy.row(policy.context_row(history));
}

Rollout sample_completion(const PolicyTable& policy, const TokenSeq& prompt, const SampleOptions& options,
                          std::uint64_t seed) {
  Rollout out;
  Rng rng(seed);
  TokenSeq history = prompt;
  for (std::size_t t = 0; t < options.max_len; ++t) {
    const std::size_t r = policy.context_row(history);
    std::vector<double> probs = softmax_with_temperature(policy.row(r), options.temperature);
    std::size_t choice;
    if (options.greedy) {
      choice = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    } else {
      choice = pick(probs, rng.uniform());
    }
    const TokenId token = static_cast<TokenId>(choice);
    out.tokens.push_back(token);
    out.rows.push_back(r);
    out.distributions.push_back(std::move(probs));
    history.push_back(token);
    if (options.eos && token == *options.eos) break;
  }
  return out;
}

SampledGroup sample_group(const PolicyTable& policy, const TokenSeq& prompt, std::size_t group_size,
                          const SampleOptions& options, std::uint64_t seed, int threads) {
  if (group_size < 2) throw Error(ErrorKind::kInvalidInput, "group size must be >= 2");
  if (options.max_len < 1) throw Error(ErrorKind::kInvalidInput, "max_len must be >= 1");
  if (!(options.temperature > 0.0)) throw Error(ErrorKind::kInvalidInput, "temperature must be > 0");

  SampledGroup out;
  out.rollouts.resize(group_size);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < group_size; i += stride) {
      out.rollouts[i] = sample_completion(policy, prompt, options, derive_seed({seed, i}));
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, group_size);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  out.group.prompt = prompt;
  out.group.rewards.assign(group_size, 0.0);
  for (const Rollout& r : out.rollouts) out.group.completions.push_back(r.tokens);
  return out;
}

void accumulate_param_grad(const Rollout& rollout, const Matrix& logit_grads, Matrix& param_grad, double scale) {
  if (logit_grads.rows() != rollout.rows.size() || logit_grads.cols() != param_grad.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "logit gradient shape does not match rollout");
  }
  const auto& k = kernels::active();
  for (std::size_t t = 0; t < rollout.rows.size(); ++t) {
    k.axpy(scale, logit_grads.row(t), param_grad.row(rollout.rows[t]));
  }
}

Matrix gather_logits(const PolicyTable& policy, const Rollout& rollout) {
  Matrix out(rollout.rows.size(), static_cast<std::size_t>(policy.vocab_size()));
  for (std::size_t t = 0; t < rollout.rows.size(); ++t) {
    const auto src = policy.row(rollout.rows[t]);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

}  // namespace gtpo
