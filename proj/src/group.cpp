// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/group.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "gtpo/error.hpp"

namespace gtpo {

void validate_tokens(std::span<const TokenId> seq, int vocab_size) {
  if (seq.empty()) throw Error(ErrorKind::kInvalidInput, "token sequence is empty");
  for (TokenId id : seq) {
    if (id < 0 || id >= vocab_size) {
      throw Error(ErrorKind::kInvalidInput, "token id " + std::to_string(id) +
                                                " outside vocabulary of size " +
                                                std::to_string(vocab_size));
    }
  }
}

void validate_group(const CompletionGroup& group) {
  const std::size_t g = group.completions.size();
  if (g < 2) throw Error(ErrorKind::kInvalidGroup, "group needs at least 2 completions, got " + std::to_string(g));
  if (group.rewards.size() != g) {
    throw Error(ErrorKind::kInvalidGroup, "rewards length " + std::to_string(group.rewards.size()) +
                                              " != completions " + std::to_string(g));
  }
  if (group.advantages && group.advantages->size() != g) {
    throw Error(ErrorKind::kInvalidGroup, "advantages length " + std::to_string(group.advantages->size()) +
                                              " != completions " + std::to_string(g));
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (group.completions[i].empty()) {
      throw Error(ErrorKind::kInvalidGroup, "completion " + std::to_string(i) + " is empty");
    }
  }
}

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw Error(ErrorKind::kInvalidGroup, "advantage normalization needs G >= 2");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_pop = std::sqrt(var / static_cast<double>(g));
  std::vector<double> out(g, 0.0);
  if (std_pop < kDegenerateStd) return out;
  for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mean) / std_pop;
  return out;
}

void assign_advantages(CompletionGroup& group) { group.advantages = normalize_advantages(group.rewards); }

SignPartition partition_signs(std::span<const double> advantages) {
  SignPartition p;
  for (std::size_t i = 0; i < advantages.size(); ++i) {
    const double a = advantages[i];
    if (std::abs(a) < kZeroAdvantage) {
      p.zero.push_back(i);
    } else if (a > 0.0) {
      p.positive.push_back(i);
    } else {
      p.negative.push_back(i);
    }
  }
  return p;
}

bool is_degenerate(std::span<const double> advantages) {
  return std::all_of(advantages.begin(), advantages.end(),
                     [](double a) { return std::abs(a) < kZeroAdvantage; });
}

std::vector<double> prefix_gradient_coefficient(const CompletionGroup& group,
                                                std::span<const PrefixGroup> prefix_groups) {
  if (!group.advantages) throw Error(ErrorKind::kInvalidGroup, "advantages are not set");
  const auto& adv = *group.advantages;
  std::vector<double> out;
  out.reserve(prefix_groups.size());
  for (std::size_t k = 0; k < prefix_groups.size(); ++k) {
    const PrefixGroup& pg = prefix_groups[k];
    if (pg.members.empty()) throw Error(ErrorKind::kInvalidInput, "prefix group " + std::to_string(k) + " is empty");
    const TokenSeq* first = nullptr;
    double coeff = 0.0;
    for (std::size_t i : pg.members) {
      if (i >= group.completions.size()) {
        throw Error(ErrorKind::kInvalidInput, "prefix group member " + std::to_string(i) + " out of range");
      }
      const TokenSeq& seq = group.completions[i];
      if (seq.size() < pg.prefix_length) {
        throw Error(ErrorKind::kInconsistentPrefix, "completion " + std::to_string(i) +
                                                        " is shorter than the claimed prefix");
      }
      if (first == nullptr) {
        first = &seq;
      } else if (!std::equal(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(pg.prefix_length),
                             first->begin())) {
        throw Error(ErrorKind::kInconsistentPrefix,
                    "completion " + std::to_string(i) + " does not share the claimed prefix of group " +
                        std::to_string(k));
      }
      coeff += adv[i] / static_cast<double>(seq.size());
    }
    out.push_back(coeff);
  }
  return out;
}

std::vector<PrefixGroup> shared_prefix_groups(const CompletionGroup& group) {
  std::map<TokenId, std::vector<std::size_t>> by_first;
  for (std::size_t i = 0; i < group.completions.size(); ++i) {
    if (!group.completions[i].empty()) by_first[group.completions[i].front()].push_back(i);
  }
  std::vector<PrefixGroup> out;
  for (auto& [token, members] : by_first) {
    PrefixGroup pg{members, 0};
    if (members.size() > 1) {
      const TokenSeq& ref = group.completions[members.front()];
      std::size_t len = ref.size();
      for (std::size_t i : members) {
        const TokenSeq& s = group.completions[i];
        std::size_t l = 0;
        while (l < len && l < s.size() && s[l] == ref[l]) ++l;
        len = l;
      }
      pg.prefix_length = len;
    }
    out.push_back(std::move(pg));
  }
  return out;
}

}  // namespace gtpo
