// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "gtpo/entropy.hpp"
#include "gtpo/error.hpp"
#include "oracles.hpp"

using namespace gtpo;

TEST_CASE("shannon entropy") {
  CHECK(shannon_entropy(std::vector<double>{0, 1, 0}) == 0.0);
  CHECK(shannon_entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(shannon_entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(shannon_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK_THROWS_AS(shannon_entropy(std::vector<double>{0.5, 0.6}), Error);
  CHECK_THROWS_AS(shannon_entropy(std::vector<double>{1.5, -0.5}), Error);
  CHECK_NOTHROW(shannon_entropy(std::vector<double>{0.5, 0.5 + 5e-7}));
}

TEST_CASE("entropy of logits matches the long double oracle") {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> f(2 + rng.below(30));
    const double scale = trial % 2 ? 1.0 : 30.0;
    for (double& x : f) x = scale * oracle::normal(rng);
    const double h = entropy_of_logits(f);
    CHECK(std::abs(h - static_cast<double>(oracle::entropy(f))) < 1e-12);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(f.size())) + 1e-12);
  }
  // Extreme logits never form log(0).
  const double h = entropy_of_logits(std::vector<double>{0.0, -1e6, -1e6});
  CHECK(std::isfinite(h));
  CHECK(h == doctest::Approx(0.0));
}

TEST_CASE("mean completion entropy") {
  const std::vector<double> one_hot{1, 0};
  const std::vector<double> uniform2{0.5, 0.5};
  const std::vector<double> uniform4{0.25, 0.25, 0.25, 0.25};
  CHECK(mean_completion_entropy(std::vector<std::vector<double>>{one_hot, one_hot}) == 0.0);
  CHECK(mean_completion_entropy(std::vector<std::vector<double>>{uniform2, one_hot}) ==
        doctest::Approx(0.3466).epsilon(1e-4));
  CHECK(mean_completion_entropy(std::vector<std::vector<double>>{uniform4}) == doctest::Approx(std::log(4.0)));
  CHECK_THROWS_AS(mean_completion_entropy(std::vector<std::vector<double>>{}), Error);
}

TEST_CASE("probe of initial entropy") {
  const std::vector<TokenSeq> prompts{{0}, {1, 2}, {3}};
  SUBCASE("uniform policy over 8 tokens") {
    const PolicyTable p(3, 8);
    CHECK(probe_initial_entropy(p, prompts, {}) == doctest::Approx(std::log(8.0)).epsilon(1e-14));
    CHECK(probe_initial_entropy(p, prompts, {}) == doctest::Approx(2.0794).epsilon(1e-4));
  }
  SUBCASE("deterministic policy") {
    PolicyTable p(1, 4);
    for (std::size_t r = 0; r < p.num_rows(); ++r) p.row(r)[2] = 1e4;
    CHECK(probe_initial_entropy(p, prompts, {}) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("mixed policy equals a direct recomputation") {
    PolicyTable p(2, 5);
    Rng rng(17);
    for (double& x : p.params().flat()) x = 1.5 * oracle::normal(rng);
    const ProbeOptions opts{6, TokenId{0}};
    // Independent path: greedy rollouts walked by hand, entropies from the oracle.
    long double total = 0.0L;
    for (const TokenSeq& prompt : prompts) {
      TokenSeq history = prompt;
      long double sum = 0.0L;
      std::size_t n = 0;
      for (std::size_t t = 0; t < opts.max_len; ++t) {
        const auto row = p.row(p.context_row(history));
        sum += oracle::entropy(row);
        ++n;
        std::size_t best = 0;
        for (std::size_t k = 1; k < row.size(); ++k) {
          if (row[k] > row[best]) best = k;
        }
        history.push_back(static_cast<TokenId>(best));
        if (static_cast<TokenId>(best) == *opts.eos) break;
      }
      total += sum / n;
    }
    const double expect = static_cast<double>(total / prompts.size());
    CHECK(probe_initial_entropy(p, prompts, opts) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(probe_initial_entropy(PolicyTable(1, 3), std::vector<TokenSeq>{}, {}), Error);
}

TEST_CASE("delta filter truth table") {
  CHECK(delta_filter(0.9, 5.0, kLn2) == 1);
  CHECK(delta_filter(0.3, 0.8, kLn2) == 0);
  CHECK(delta_filter(0.3, 0.5, kLn2) == 1);
  // Strict inequalities: equality with the threshold is not "above".
  CHECK(delta_filter(kLn2, 5.0) == 0);
  CHECK(delta_filter(0.1, kLn2) == 1);
}

TEST_CASE("entropy fold") {
  CHECK(fold_entropy_penalty(0.5, 0.4, 0.1, 1) == doctest::Approx(0.46).epsilon(1e-15));
  CHECK(fold_entropy_penalty(0.5, 0.8, 0.1, 0) == 0.0);
  CHECK(fold_entropy_penalty(-1.25, 3.0, 0.0, 1) == -1.25);
}

TEST_CASE("k3 estimator") {
  CHECK(kl_k3(-1.3, -1.3) == 0.0);
  CHECK(kl_k3(0.1, 0.0) == doctest::Approx(0.0051709).epsilon(1e-6));
  CHECK(kl_k3(0.1, 0.0) == doctest::Approx(std::exp(0.1) - 1.1).epsilon(1e-12));
  // Tiny differences stay accurate instead of cancelling to zero.
  CHECK(kl_k3(1e-8, 0.0) == doctest::Approx(0.5e-16).epsilon(1e-6));
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double a = -30.0 * rng.uniform();
    const double b = -30.0 * rng.uniform();
    CHECK_MESSAGE(kl_k3(a, b) >= 0.0, a << " " << b);
  }
}
