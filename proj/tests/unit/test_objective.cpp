// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "gtpo/error.hpp"
#include "gtpo/objective.hpp"
#include "oracles.hpp"

using namespace gtpo;

namespace {

LogitsTensor perturbed(Rng& rng, const LogitsTensor& base, double scale) {
  LogitsTensor out = base;
  for (Matrix& m : out) {
    for (double& x : m.flat()) x += scale * oracle::normal(rng);
  }
  return out;
}

double max_abs_diff(const LogitsTensor& a, const LogitsTensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) d = std::max(d, std::abs(a[i].flat()[k] - b[i].flat()[k]));
  }
  return d;
}

}  // namespace

TEST_CASE("log_softmax_prob") {
  CHECK(log_softmax_prob(std::vector<double>{0, 0}, 0) == doctest::Approx(-0.6931).epsilon(1e-4));
  CHECK(log_softmax_prob(std::vector<double>{1, 0, 0}, 0) == doctest::Approx(-0.5514).epsilon(1e-4));
  CHECK(log_softmax_prob(std::vector<double>{1, 0, 0}, 0) == doctest::Approx(1 - std::log(std::exp(1.0) + 2)));
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> f(2 + rng.below(20));
    for (double& x : f) x = 3 * oracle::normal(rng);
    const double c = 50 * oracle::normal(rng);
    std::vector<double> g(f);
    for (double& x : g) x += c;
    const auto j = static_cast<TokenId>(rng.below(f.size()));
    CHECK(log_softmax_prob(f, j) == doctest::Approx(log_softmax_prob(g, j)).epsilon(1e-12));
    CHECK(log_softmax_prob(f, j) == doctest::Approx(static_cast<double>(oracle::log_softmax(f, j))).epsilon(1e-13));
  }
}

TEST_CASE("logprob gradient") {
  const auto g = logprob_grad_wrt_logits(std::vector<double>{0, 0}, 0);
  CHECK(g[0] == 0.5);
  CHECK(g[1] == -0.5);
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> f(20);
    for (double& x : f) x = 2 * oracle::normal(rng);
    const auto j = static_cast<TokenId>(rng.below(20));
    const auto grad = logprob_grad_wrt_logits(f, j);
    CHECK(std::abs(std::accumulate(grad.begin(), grad.end(), 0.0)) < 1e-14);
    for (std::size_t k = 0; k < f.size(); ++k) {
      std::vector<double> fp(f), fm(f);
      fp[k] += 1e-5;
      fm[k] -= 1e-5;
      const long double num = (oracle::log_softmax(fp, j) - oracle::log_softmax(fm, j)) / 2e-5L;
      const double rel = std::abs(grad[k] - static_cast<double>(num)) /
                         std::max({std::abs(grad[k]), std::abs(static_cast<double>(num)), 1e-8});
      CHECK(rel <= 1e-6);
    }
  }
}

TEST_CASE("grpo value is zero at ratio one and the gradient is not") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto group = oracle::random_group(rng, {8, 2, 8, 1, 12});
    const auto logits = oracle::random_logits(rng, group, 8);
    const auto r = grpo_loss_and_grad(group, logits, *group.advantages, {});
    CHECK(std::abs(r.value) < 1e-9);
    CHECK(r.mean_kl == 0.0);
    if (!is_degenerate(*group.advantages)) {
      double norm = 0.0;
      for (const Matrix& m : r.grad) {
        for (double x : m.flat()) norm += x * x;
      }
      CHECK(norm > 0.0);
    }
  }
}

TEST_CASE("grpo KL term vanishes for identical policies") {
  Rng rng(13);
  auto group = oracle::random_group(rng, {6, 4, 4, 1, 6});
  const auto logits = oracle::random_logits(rng, group, 6);
  const auto with = grpo_loss_and_grad(group, logits, *group.advantages, {0.3, KlEstimator::kK3}, &logits);
  const auto without = grpo_loss_and_grad(group, logits, *group.advantages, {});
  CHECK(with.mean_kl == 0.0);
  CHECK(with.value == without.value);
  CHECK(max_abs_diff(with.grad, without.grad) == 0.0);
  CHECK_THROWS_AS(grpo_loss_and_grad(group, logits, *group.advantages, {0.1, KlEstimator::kK3}, nullptr), Error);
}

TEST_CASE("grpo gradient against finite differences") {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    auto group = oracle::random_group(rng, {8, 4, 4, 1, 6});
    const auto logits = oracle::random_logits(rng, group, 8);
    const auto ref = perturbed(rng, logits, 0.5);
    oracle::SurrogateSpec surr;
    surr.coef = *group.advantages;
    SUBCASE("beta zero") {
      const auto r = grpo_loss_and_grad(group, logits, *group.advantages, {});
      CHECK(oracle::finite_difference_check(group, logits, r.grad, surr).max_rel_error <= 1e-5);
    }
    SUBCASE("k3 penalty") {
      surr.beta = 0.2;
      const auto r = grpo_loss_and_grad(group, logits, *group.advantages, {0.2, KlEstimator::kK3}, &ref);
      CHECK(oracle::finite_difference_check(group, logits, r.grad, surr, &ref).max_rel_error <= 1e-5);
      CHECK(r.mean_kl > 0.0);
    }
    SUBCASE("exact penalty") {
      surr.beta = 0.2;
      surr.exact_kl = true;
      const auto r = grpo_loss_and_grad(group, logits, *group.advantages, {0.2, KlEstimator::kExact}, &ref);
      CHECK(oracle::finite_difference_check(group, logits, r.grad, surr, &ref).max_rel_error <= 1e-5);
    }
  }
}

TEST_CASE("gtpo gradient against finite differences") {
  Rng rng(22);
  for (int trial = 0; trial < 60; ++trial) {
    auto group = oracle::random_signed_group(rng, {8, 2, 8, 1, 8});
    const auto logits = oracle::random_logits(rng, group, 8);
    const auto& adv = *group.advantages;
    oracle::SurrogateSpec surr;
    surr.coef = adv;
    SUBCASE("per-length, union") {
      const auto lw = build_lambda_weights(group, partition_signs(adv));
      surr.token_weight = lw.weights;
      const auto r = gtpo_loss_and_grad(group, logits, lw, adv);
      CHECK(oracle::finite_difference_check(group, logits, r.grad, surr).max_rel_error <= 1e-5);
    }
    SUBCASE("code-faithful, product") {
      const auto lw = build_lambda_weights(group, partition_signs(adv), OverlapMode::kProduct);
      surr.token_weight = lw.weights;
      surr.divisor.assign(lw.n_conflict.begin(), lw.n_conflict.end());
      GtpoOptions opts;
      opts.normalization = Normalization::kCodeFaithful;
      const auto r = gtpo_loss_and_grad(group, logits, lw, adv, opts);
      CHECK(oracle::finite_difference_check(group, logits, r.grad, surr).max_rel_error <= 1e-5);
    }
    SUBCASE("differentiable entropy") {
      const auto lw = build_lambda_weights(group, partition_signs(adv));
      surr.token_weight = lw.weights;
      surr.gamma = 0.1;
      surr.keep.resize(group.size());
      for (int& k : surr.keep) k = static_cast<int>(rng.below(2));
      GtpoOptions opts;
      opts.entropy_term = EntropyTerm::kDifferentiable;
      opts.gamma = 0.1;
      opts.keep = surr.keep;
      const auto r = gtpo_loss_and_grad(group, logits, lw, adv, opts);
      CHECK(oracle::finite_difference_check(group, logits, r.grad, surr).max_rel_error <= 1e-5);
    }
  }
}

TEST_CASE("gtpo aggregated value") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    auto group = oracle::random_group(rng, {4, 2, 8, 1, 12});
    const auto& adv = *group.advantages;
    const auto logits = oracle::random_logits(rng, group, 4);
    const auto lw = build_lambda_weights(group, partition_signs(adv));
    const auto r = gtpo_loss_and_grad(group, logits, lw, adv);
    const auto counts = raw_conflict_counts(lw);
    double expect = 0.0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      expect += counts[i] / static_cast<double>(group.completions[i].size()) * std::abs(adv[i]);
    }
    expect /= static_cast<double>(group.size());
    CHECK(std::abs(std::abs(r.value) - expect) <= 1e-9);
  }
}

TEST_CASE("gtpo with unit weights is grpo") {
  Rng rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    auto group = oracle::random_group(rng, {10, 2, 8, 1, 12});
    const auto& adv = *group.advantages;
    const auto logits = oracle::random_logits(rng, group, 10);
    LambdaWeights ones;
    for (const auto& seq : group.completions) {
      ones.weights.emplace_back(seq.size(), 1.0);
      ones.conflict.emplace_back(seq.size(), 0);
      ones.n_conflict.push_back(1);
    }
    const auto a = gtpo_loss_and_grad(group, logits, ones, adv);
    const auto b = grpo_loss_and_grad(group, logits, adv, {});
    CHECK(max_abs_diff(a.grad, b.grad) <= 1e-12);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
  }
}

TEST_CASE("per-position gradient rows sum to zero") {
  Rng rng(25);
  for (int trial = 0; trial < 100; ++trial) {
    auto group = oracle::random_signed_group(rng, {12, 2, 8, 1, 12});
    const auto logits = oracle::random_logits(rng, group, 12);
    const auto lw = build_lambda_weights(group, partition_signs(*group.advantages));
    GtpoOptions opts;
    opts.entropy_term = EntropyTerm::kDifferentiable;
    opts.gamma = 0.3;
    const auto r = gtpo_loss_and_grad(group, logits, lw, *group.advantages, opts);
    for (const Matrix& m : r.grad) {
      for (std::size_t t = 0; t < m.rows(); ++t) {
        const auto row = m.row(t);
        CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("withheld and zero-advantage completions get zero gradient rows") {
  CompletionGroup g;
  g.prompt = {0};
  g.completions = {{1, 2, 3}, {1, 2, 3}, {4, 4}};
  g.rewards = {0, 0, 0};
  const std::vector<double> adv{1.0, -1.0, 0.0};
  Rng rng(1);
  const auto logits = oracle::random_logits(rng, g, 5);
  const auto lw = build_lambda_weights(g, partition_signs(adv));
  const auto r = gtpo_loss_and_grad(g, logits, lw, adv);
  for (double x : r.grad[1].flat()) CHECK(x == 0.0);
  for (double x : r.grad[2].flat()) CHECK(x == 0.0);
}

TEST_CASE("shape errors") {
  CompletionGroup g;
  g.prompt = {0};
  g.completions = {{1, 2}, {3}};
  g.rewards = {0, 1};
  const std::vector<double> adv{-1, 1};
  LogitsTensor logits{Matrix(2, 4), Matrix(1, 4)};
  auto lw = build_lambda_weights(g, partition_signs(adv));
  CHECK_NOTHROW(gtpo_loss_and_grad(g, logits, lw, adv));
  auto expect_kind = [](auto&& fn, ErrorKind kind) {
    try {
      fn();
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.kind() == kind);
    }
  };
  LogitsTensor short_rows{Matrix(1, 4), Matrix(1, 4)};
  expect_kind([&] { gtpo_loss_and_grad(g, short_rows, lw, adv); }, ErrorKind::kShapeMismatch);
  LogitsTensor narrow{Matrix(2, 3), Matrix(1, 3)};
  expect_kind([&] { grpo_loss_and_grad(g, narrow, adv, {}); }, ErrorKind::kShapeMismatch);
  lw.weights[0].pop_back();
  expect_kind([&] { gtpo_loss_and_grad(g, logits, lw, adv); }, ErrorKind::kShapeMismatch);
  expect_kind([&] { grpo_loss_and_grad(g, logits, std::vector<double>{1}, {}); }, ErrorKind::kShapeMismatch);
}

TEST_CASE("collapse case expansion") {
  const auto two = collapse_case_expansion(std::vector<double>{0.99, 0.01}, -1.0, 1);
  CHECK(two[0] == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(0.01).epsilon(1e-12));
  const auto five = collapse_case_expansion(std::vector<double>{0.01, 0.01, 0.96, 0.01, 0.01}, -1.0, 1);
  CHECK(five[2] == doctest::Approx(-0.04).epsilon(1e-12));
  for (std::size_t k : {0u, 1u, 3u, 4u}) CHECK(five[k] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(std::abs(std::accumulate(five.begin(), five.end(), 0.0)) < 1e-15);
  CHECK_THROWS_AS(collapse_case_expansion(std::vector<double>{}, 1.0, 1), Error);
}
