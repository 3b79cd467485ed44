// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <string>

#include "gtpo/conflict_mask.hpp"
#include "gtpo/task.hpp"
#include "oracles.hpp"

using namespace gtpo;

namespace {

using Row = std::vector<std::uint8_t>;
using Weights = std::vector<double>;

CompletionGroup running_example() {
  CompletionGroup g;
  g.prompt = {0};
  g.completions = {{5, 9, 1, 7, 8}, {5, 9, 2, 8}, {5, 9, 3, 8}, {5, 4, 8}};
  g.rewards = {1, 1, 0, 0};
  g.advantages = std::vector<double>{1, 1, -1, -1};
  return g;
}

CompletionGroup with_signs(std::vector<TokenSeq> completions, std::vector<double> adv) {
  CompletionGroup g;
  g.prompt = {0};
  g.rewards.assign(completions.size(), 0.0);
  g.completions = std::move(completions);
  g.advantages = std::move(adv);
  return g;
}

LambdaWeights build(const CompletionGroup& g, OverlapMode mode = OverlapMode::kUnion) {
  return build_lambda_weights(g, partition_signs(*g.advantages), mode);
}

}  // namespace

TEST_CASE("forward indicator on the running example") {
  const auto g = running_example();
  const auto fwd = forward_conflict_indicator(g, partition_signs(*g.advantages));
  CHECK(fwd[0] == Row{1, 1, 0, 0, 0});
  // Token 8 sits at position 3 in both [5,9,2,8] and [5,9,3,8]. The raw
  // indicator marks it; the span rule later drops it.
  CHECK(fwd[1] == Row{1, 1, 0, 1});
  CHECK(fwd[2] == Row{1, 1, 0, 1});
  // Token 4 at position 1 exists only in a negative completion.
  CHECK(fwd[3] == Row{1, 0, 0});
}

TEST_CASE("backward indicator on the running example") {
  const auto g = running_example();
  const auto bwd = backward_conflict_indicator(g, partition_signs(*g.advantages));
  CHECK(bwd[0] == Row{0, 0, 0, 0, 1});
  CHECK(bwd[1] == Row{1, 1, 0, 1});
  CHECK(bwd[2] == Row{1, 1, 0, 1});
  CHECK(bwd[3] == Row{0, 0, 1});
}

TEST_CASE("lambda weights on the running example") {
  const auto lw = build(running_example());
  CHECK(lw.weights[0] == Weights{2, 2, 1, 1, 2});
  CHECK(lw.weights[1] == Weights{2, 2, 1, 2});
  CHECK(lw.weights[2] == Weights{0, 0, 1, 0});
  CHECK(lw.weights[3] == Weights{0, 1, 0});
  CHECK(lw.n_conflict == std::vector<int>{3, 3, 3, 2});
  CHECK(raw_conflict_counts(lw) == std::vector<int>{3, 3, 3, 2});
  CHECK(conflict_stats(lw) == doctest::Approx(11.0 / 4));
}

TEST_CASE("product overlap only differs where spans overlap") {
  // Identical pair: every position is in both spans.
  const auto g = with_signs({{3, 1, 4}, {3, 1, 4}}, {1, -1});
  const auto u = build(g, OverlapMode::kUnion);
  const auto p = build(g, OverlapMode::kProduct);
  CHECK(u.weights[0] == Weights{2, 2, 2});
  CHECK(p.weights[0] == Weights{4, 4, 4});
  CHECK(u.weights[1] == Weights{0, 0, 0});
  CHECK(p.weights[1] == Weights{0, 0, 0});
  CHECK(u.conflict == p.conflict);
  // Non-overlapping spans agree.
  const auto r = running_example();
  CHECK(build(r, OverlapMode::kUnion) == build(r, OverlapMode::kProduct));
}

TEST_CASE("trivial mask cases") {
  SUBCASE("all positive") {
    const auto lw = build(with_signs({{1, 2}, {1, 2}, {1}}, {1, 0.5, 2}));
    for (const auto& row : lw.conflict) CHECK(std::count(row.begin(), row.end(), 1) == 0);
    for (const auto& row : lw.weights) CHECK(std::count(row.begin(), row.end(), 1.0) == std::ptrdiff_t(row.size()));
    CHECK(lw.n_conflict == std::vector<int>{1, 1, 1});
    CHECK(conflict_stats(lw) == 0.0);
  }
  SUBCASE("identical pos/neg pair of length 4") {
    const auto lw = build(with_signs({{1, 2, 3, 4}, {1, 2, 3, 4}}, {1, -1}));
    CHECK(lw.conflict[0] == Row{1, 1, 1, 1});
    CHECK(lw.conflict[1] == Row{1, 1, 1, 1});
    CHECK(conflict_stats(lw) == 4.0);
  }
  SUBCASE("single tokens") {
    const auto g = with_signs({{7}, {7}}, {1, -1});
    const auto bwd = backward_conflict_indicator(g, partition_signs(*g.advantages));
    CHECK(bwd[0] == Row{1});
    CHECK(bwd[1] == Row{1});
  }
  SUBCASE("disjoint vocabularies") {
    const auto g = with_signs({{1, 2, 1}, {2, 1}, {3, 4, 3}, {4}}, {1, 1, -1, -1});
    const auto s = partition_signs(*g.advantages);
    for (const auto& row : forward_conflict_indicator(g, s)) CHECK(std::count(row.begin(), row.end(), 1) == 0);
    for (const auto& row : backward_conflict_indicator(g, s)) CHECK(std::count(row.begin(), row.end(), 1) == 0);
  }
  SUBCASE("counts [3,3,2,2]") {
    LambdaWeights lw;
    lw.conflict = {Row{1, 1, 1}, Row{1, 0, 1, 1}, Row{1, 1}, Row{0, 1, 1, 0}};
    CHECK(conflict_stats(lw) == 2.5);
  }
  SUBCASE("zero-advantage completions keep identity weights") {
    const auto lw = build(with_signs({{1, 2}, {1, 2}, {1, 2}}, {1, -1, 0}));
    CHECK(lw.weights[2] == Weights{1, 1});
    CHECK(lw.conflict[2] == Row{0, 0});
    CHECK(lw.n_conflict[2] == 1);
  }
}

TEST_CASE("conflict positions inside a run stop at the first break") {
  // Position 2 matches again after a mismatch at position 1 but is not part of the leading run.
  const auto lw = build(with_signs({{1, 2, 3, 9, 9, 5}, {1, 4, 3, 8, 8, 8, 5}}, {1, -1}));
  CHECK(lw.conflict[0] == Row{1, 0, 0, 0, 0, 1});
  CHECK(lw.conflict[1] == Row{1, 0, 0, 0, 0, 0, 1});
}

TEST_CASE("tagged completions: format tags conflict, answer digits do not") {
  const Vocabulary v = arithmetic_vocabulary();
  auto enc = [&](const char* text) { return v.encode(text); };
  const auto g = with_signs(
      {
          enc("<reasoning> add so </reasoning> <answer> 4 </answer> <eos>"),
          enc("<reasoning> add carry so </reasoning> <answer> 4 </answer> <eos>"),
          enc("<reasoning> add so </reasoning> <answer> 3 </answer> <eos>"),
          enc("<reasoning> sub so </reasoning> <answer> 1 2 </answer> <eos>"),
      },
      {1, 1, -1, -1});
  const auto lw = build(g);
  const TokenId open = v.id("<reasoning>");
  const TokenId close = v.id("</answer>");
  const TokenId eos = v.id("<eos>");
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& seq = g.completions[i];
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const std::string sym = v.symbol(seq[t]);
      const bool tag = seq[t] == open || seq[t] == close || seq[t] == eos;
      const bool digit = sym.size() == 1 && sym[0] >= '0' && sym[0] <= '9';
      INFO("completion " << i << " position " << t << " " << sym);
      if (tag) CHECK(lw.conflict[i][t] == 1);
      if (digit) CHECK(lw.conflict[i][t] == 0);
    }
  }
  // Conflict tags are boosted for the positive and withheld from the negative.
  CHECK(lw.weights[0].front() == 2.0);
  CHECK(lw.weights[2].back() == 0.0);
}

TEST_CASE("fast path equals both oracles on random groups") {
  Rng rng(2026);
  const oracle::GroupShape shape{12, 2, 8, 1, 20};
  for (int trial = 0; trial < 3000; ++trial) {
    const auto g = oracle::random_signed_group(rng, shape);
    const auto signs = partition_signs(*g.advantages);
    for (const auto mode : {OverlapMode::kUnion, OverlapMode::kProduct}) {
      const auto fast = build_lambda_weights(g, signs, mode);
      std::string why;
      const bool a = oracle::same_lambda(fast, oracle_lambda_weights(g, signs, mode), &why);
      if (!a) FAIL_CHECK("builtin oracle: " << why);
      const bool b = oracle::same_lambda(fast, oracle::literal_lambda(g, *g.advantages, mode), &why);
      if (!b) FAIL_CHECK("literal oracle: " << why);
    }
  }
}

TEST_CASE("exhaustive: vocabulary 2, pairs up to length 3") {
  const auto pool = oracle::all_sequences(2, 3);
  std::size_t mismatches = 0;
  const std::size_t n = oracle::enumerate_signed_groups(pool, 2, [&](const CompletionGroup& g, const auto& adv) {
    const auto fast = build_lambda_weights(g, partition_signs(adv), OverlapMode::kUnion);
    if (!oracle::same_lambda(fast, oracle::literal_lambda(g, adv))) ++mismatches;
  });
  CHECK(n == 14 * 14 * 9);
  CHECK(mismatches == 0);
}

TEST_CASE("mask properties") {
  Rng rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto g = oracle::random_signed_group(rng, {6, 2, 6, 1, 10});
    const auto signs = partition_signs(*g.advantages);
    const auto lw = build_lambda_weights(g, signs);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = (*g.advantages)[i];
      for (std::size_t t = 0; t < lw.weights[i].size(); ++t) {
        const double w = lw.weights[i][t];
        if (lw.conflict[i][t]) {
          CHECK(w == (a > 0 ? 2.0 : 0.0));
        } else {
          CHECK(w == 1.0);
        }
      }
      CHECK(lw.n_conflict[i] >= 1);
    }
    // Swapping every sign swaps the boosted and withheld roles but keeps the mask.
    std::vector<double> flipped(*g.advantages);
    for (double& x : flipped) x = -x;
    const auto lf = build_lambda_weights(g, partition_signs(flipped));
    CHECK(lf.conflict == lw.conflict);
  }
}
