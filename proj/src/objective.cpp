// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtpo/entropy.hpp"
#include "gtpo/error.hpp"
#include "gtpo/kernels.hpp"

namespace gtpo {
namespace {

void check_logits(const CompletionGroup& group, const LogitsTensor& logits, const char* what) {
  const std::size_t g = group.completions.size();
  if (logits.size() != g) {
    throw Error(ErrorKind::kShapeMismatch, std::string(what) + ": expected " + std::to_string(g) +
                                               " logit matrices, got " + std::to_string(logits.size()));
  }
  const std::size_t vocab = g ? logits[0].cols() : 0;
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < g; ++i) {
    const TokenSeq& seq = group.completions[i];
    if (logits[i].rows() != seq.size() || logits[i].cols() != vocab) {
      throw Error(ErrorKind::kShapeMismatch, std::string(what) + ": completion " + std::to_string(i) +
                                                 " has " + std::to_string(seq.size()) + " tokens but logits are " +
                                                 std::to_string(logits[i].rows()) + "x" +
                                                 std::to_string(logits[i].cols()));
    }
    for (TokenId id : seq) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw Error(ErrorKind::kShapeMismatch, std::string(what) + ": token id " + std::to_string(id) +
                                                   " outside logit width " + std::to_string(vocab));
      }
    }
    if (!k.all_finite(logits[i].flat())) {
      throw Error(ErrorKind::kInvalidInput, std::string(what) + ": non-finite logits in completion " +
                                                std::to_string(i));
    }
  }
}

void check_group(const CompletionGroup& group, std::span<const double> advantages) {
  const std::size_t g = group.completions.size();
  if (g < 2) throw Error(ErrorKind::kInvalidGroup, "group needs at least 2 completions");
  if (advantages.size() != g) {
    throw Error(ErrorKind::kShapeMismatch, "advantages length " + std::to_string(advantages.size()) +
                                               " != group size " + std::to_string(g));
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (group.completions[i].empty()) {
      throw Error(ErrorKind::kInvalidGroup, "completion " + std::to_string(i) + " is empty");
    }
    if (!std::isfinite(advantages[i])) {
      throw Error(ErrorKind::kInvalidInput, "advantage " + std::to_string(i) + " is not finite");
    }
  }
}

LogitsTensor zeros_like(const LogitsTensor& logits) {
  LogitsTensor out;
  out.reserve(logits.size());
  for (const Matrix& m : logits) out.emplace_back(m.rows(), m.cols(), 0.0);
  return out;
}

// out += scale * (e_j - pi); pi is softmax of the row.
void add_logprob_grad(std::span<const double> pi, TokenId chosen, double scale, std::span<double> out) {
  kernels::active().axpy(-scale, pi, out);
  out[static_cast<std::size_t>(chosen)] += scale;
}

}  // namespace

double log_softmax_prob(std::span<const double> logits, TokenId chosen) {
  return logits[static_cast<std::size_t>(chosen)] - logsumexp(logits);
}

std::vector<double> logprob_grad_wrt_logits(std::span<const double> logits, TokenId chosen) {
  std::vector<double> pi = softmax(logits);
  std::vector<double> g(pi.size(), 0.0);
  add_logprob_grad(pi, chosen, 1.0, g);
  return g;
}

LossReport grpo_loss_and_grad(const CompletionGroup& group, const LogitsTensor& logits,
                              std::span<const double> advantages, const GrpoOptions& options,
                              const LogitsTensor* ref_logits) {
  check_group(group, advantages);
  check_logits(group, logits, "grpo logits");
  if (options.beta > 0.0 && ref_logits == nullptr) {
    throw Error(ErrorKind::kMissingReference, "beta > 0 requires reference logits");
  }
  if (ref_logits != nullptr) check_logits(group, *ref_logits, "grpo reference logits");

  const std::size_t g = group.completions.size();
  const double inv_g = 1.0 / static_cast<double>(g);
  LossReport report;
  report.grad = zeros_like(logits);

  double policy_part = 0.0;
  double kl_part = 0.0;
  double kl_tokens = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const TokenSeq& seq = group.completions[i];
    const double inv_len = 1.0 / static_cast<double>(seq.size());
    const double coef = -(inv_g * inv_len) * advantages[i];
    double ratio_sum = 0.0;
    double kl_sum = 0.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto row = logits[i].row(t);
      const std::vector<double> pi = softmax(row);
      const double ratio = 1.0;  // exp(logp - stopgrad(logp))
      ratio_sum += ratio;
      add_logprob_grad(pi, seq[t], coef * ratio, report.grad[i].row(t));

      if (ref_logits != nullptr) {
        const auto ref_row = (*ref_logits)[i].row(t);
        const double logp = log_softmax_prob(row, seq[t]);
        const double ref_logp = log_softmax_prob(ref_row, seq[t]);
        const double k3 = kl_k3(ref_logp, logp);
        kl_tokens += k3;
        if (options.beta > 0.0) {
          const double scale = options.beta * inv_g * inv_len;
          if (options.kl == KlEstimator::kK3) {
            kl_sum += k3;
            // d k3 / d logp = 1 - e^(ref_logp - logp)
            add_logprob_grad(pi, seq[t], scale * (-std::expm1(ref_logp - logp)), report.grad[i].row(t));
          } else {
            const std::vector<double> pi_ref = softmax(ref_row);
            const double lse = logsumexp(row);
            const double ref_lse = logsumexp(ref_row);
            double kl = 0.0;
            for (std::size_t k = 0; k < pi_ref.size(); ++k) {
              if (pi_ref[k] > 0.0) kl += pi_ref[k] * ((ref_row[k] - ref_lse) - (row[k] - lse));
            }
            kl_sum += kl;
            auto grow = report.grad[i].row(t);
            for (std::size_t k = 0; k < pi.size(); ++k) grow[k] += scale * (pi[k] - pi_ref[k]);
          }
        }
      }
    }
    policy_part += coef * ratio_sum;
    kl_part += options.beta * inv_g * inv_len * kl_sum;
    report.n_tokens += seq.size();
  }
  report.value = policy_part + kl_part;
  report.mean_kl = ref_logits != nullptr ? kl_tokens / static_cast<double>(report.n_tokens) : 0.0;
  return report;
}

LossReport gtpo_loss_and_grad(const CompletionGroup& group, const LogitsTensor& logits,
                              const LambdaWeights& lambda, std::span<const double> advantages,
                              const GtpoOptions& options, const LogitsTensor* ref_logits) {
  check_group(group, advantages);
  check_logits(group, logits, "gtpo logits");
  if (ref_logits != nullptr) check_logits(group, *ref_logits, "gtpo reference logits");
  const std::size_t g = group.completions.size();
  if (lambda.weights.size() != g || lambda.n_conflict.size() != g) {
    throw Error(ErrorKind::kShapeMismatch, "lambda weights cover " + std::to_string(lambda.weights.size()) +
                                               " completions, group has " + std::to_string(g));
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (lambda.weights[i].size() != group.completions[i].size()) {
      throw Error(ErrorKind::kShapeMismatch, "lambda row " + std::to_string(i) + " has " +
                                                 std::to_string(lambda.weights[i].size()) + " entries for " +
                                                 std::to_string(group.completions[i].size()) + " tokens");
    }
  }
  const bool differentiable_entropy = options.entropy_term == EntropyTerm::kDifferentiable;
  if (differentiable_entropy && !options.keep.empty() && options.keep.size() != g) {
    throw Error(ErrorKind::kShapeMismatch, "keep mask length does not match group size");
  }

  const double inv_g = 1.0 / static_cast<double>(g);
  LossReport report;
  report.grad = zeros_like(logits);
  double value = 0.0;
  double kl_tokens = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const TokenSeq& seq = group.completions[i];
    const double inv_len = 1.0 / static_cast<double>(seq.size());
    double norm = inv_g * inv_len;
    if (options.normalization == Normalization::kCodeFaithful) {
      norm /= static_cast<double>(std::max(1, lambda.n_conflict[i]));
    }
    const double coef = -norm * advantages[i];
    const bool keep_entropy = differentiable_entropy && (options.keep.empty() || options.keep[i] == 1);
    const double ent_scale = options.gamma * inv_g * inv_len;
    double weighted_ratio_sum = 0.0;
    double entropy_sum = 0.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto row = logits[i].row(t);
      const std::vector<double> pi = softmax(row);
      const double ratio = 1.0;
      const double w = lambda.weights[i][t];
      weighted_ratio_sum += w * ratio;
      auto grow = report.grad[i].row(t);
      add_logprob_grad(pi, seq[t], coef * w * ratio, grow);

      if (keep_entropy) {
        const double lse = logsumexp(row);
        double h = 0.0;
        for (std::size_t k = 0; k < pi.size(); ++k) h -= pi[k] * (row[k] - lse);
        entropy_sum += h;
        // dH/df_k = -pi_k (ln pi_k + H)
        for (std::size_t k = 0; k < pi.size(); ++k) grow[k] += ent_scale * (-pi[k] * ((row[k] - lse) + h));
      }
      if (ref_logits != nullptr) {
        const double logp = log_softmax_prob(row, seq[t]);
        const double ref_logp = log_softmax_prob((*ref_logits)[i].row(t), seq[t]);
        kl_tokens += kl_k3(ref_logp, logp);
      }
    }
    value += coef * weighted_ratio_sum;
    if (keep_entropy) value += ent_scale * entropy_sum;
    report.n_tokens += seq.size();
  }
  report.value = value;
  report.mean_kl = ref_logits != nullptr ? kl_tokens / static_cast<double>(report.n_tokens) : 0.0;
  return report;
}

std::vector<double> collapse_case_expansion(std::span<const double> pi, double advantage, std::size_t length) {
  if (pi.empty() || length == 0) throw Error(ErrorKind::kInvalidInput, "collapse expansion needs pi and |o| > 0");
  const std::size_t j = static_cast<std::size_t>(std::max_element(pi.begin(), pi.end()) - pi.begin());
  const double scale = advantage / static_cast<double>(length);
  std::vector<double> out(pi.size());
  for (std::size_t k = 0; k < pi.size(); ++k) out[k] = k == j ? scale * (1.0 - pi[j]) : -scale * pi[k];
  return out;
}

}  // namespace gtpo
