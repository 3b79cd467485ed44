// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gtpo/error.hpp"
#include "gtpo/optim.hpp"

using namespace gtpo;

TEST_CASE("zero gradient without weight decay leaves params unchanged") {
  std::vector<double> p{1.0, -2.0, 3.5};
  const auto before = p;
  OptimState s(3, {0.1, 0.9, 0.95, 1e-8, 0.0});
  for (int i = 0; i < 5; ++i) adam_step(p, std::vector<double>(3, 0.0), s);
  CHECK(p == before);
  CHECK(s.step == 5);
  sgd_step(p, std::vector<double>(3, 0.0), 0.5);
  CHECK(p == before);
}

TEST_CASE("first adam step by hand") {
  std::vector<double> p{0.0};
  OptimState s(1, {1e-6, 0.9, 0.95, 1e-8, 0.0});
  adam_step(p, std::vector<double>{1.0}, s);
  // m_hat = 1, v_hat = 1
  CHECK(p[0] == doctest::Approx(-1e-6 * (1.0 / (1.0 + 1e-8))).epsilon(1e-14));
  CHECK(s.m[0] == doctest::Approx(0.1));
  CHECK(s.v[0] == doctest::Approx(0.05));
}

TEST_CASE("adam matches a hand-rolled reference over many steps") {
  const AdamConfig cfg{0.01, 0.9, 0.99, 1e-8, 0.01};
  std::vector<double> p{0.3, -0.7};
  OptimState s(2, cfg);
  std::vector<double> rp = p, m(2, 0.0), v(2, 0.0);
  for (int t = 1; t <= 50; ++t) {
    const std::vector<double> g{std::sin(t * 0.3), std::cos(t * 0.7) * 2.0};
    adam_step(p, g, s);
    for (std::size_t i = 0; i < 2; ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      rp[i] = rp[i] - cfg.lr * mh / (std::sqrt(vh) + cfg.eps) - cfg.lr * cfg.weight_decay * rp[i];
    }
  }
  for (std::size_t i = 0; i < 2; ++i) CHECK(p[i] == doctest::Approx(rp[i]).epsilon(1e-12));
}

TEST_CASE("near-one betas are accepted and stay finite") {
  std::vector<double> p(4, 0.5);
  OptimState s(4, {1e-6, 0.99999, 0.999999, 1e-8, 0.0});
  for (int t = 0; t < 100; ++t) adam_step(p, std::vector<double>{0.1, -0.2, 0.3, 1e-9}, s);
  for (double x : p) CHECK(std::isfinite(x));
  CHECK(p[0] < 0.5);
  CHECK(p[1] > 0.5);
}

TEST_CASE("non-finite gradients are rejected without side effects") {
  std::vector<double> p{1.0, 2.0};
  OptimState s(2, {0.1, 0.9, 0.95, 1e-8, 0.0});
  adam_step(p, std::vector<double>{0.5, 0.5}, s);
  const auto p_before = p;
  const auto m_before = s.m;
  const auto step_before = s.step;
  try {
    adam_step(p, std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0.0}, s);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNonFiniteGradient);
  }
  CHECK(p == p_before);
  CHECK(s.m == m_before);
  CHECK(s.step == step_before);
  CHECK_THROWS_AS(sgd_step(p, std::vector<double>{std::numeric_limits<double>::infinity(), 0.0}, 0.1), Error);
  CHECK(p == p_before);
}

TEST_CASE("shape and rate checks") {
  std::vector<double> p(2, 0.0);
  OptimState s(3);
  CHECK_THROWS_AS(adam_step(p, std::vector<double>(2, 0.0), s), Error);
  OptimState z(2, {0.0, 0.9, 0.95, 1e-8, 0.0});
  CHECK_THROWS_AS(adam_step(p, std::vector<double>(2, 0.0), z), Error);
  CHECK_THROWS_AS(sgd_step(p, std::vector<double>(3, 0.0), 0.1), Error);
}

TEST_CASE("sgd with decoupled weight decay") {
  std::vector<double> p{1.0, -1.0};
  sgd_step(p, std::vector<double>{0.5, 0.5}, 0.1, 0.2);
  CHECK(p[0] == doctest::Approx(1.0 - 0.05 - 0.02));
  CHECK(p[1] == doctest::Approx(-1.0 - 0.05 + 0.02));
}

TEST_CASE("gradient clipping") {
  std::vector<double> g{3.0, 4.0};
  CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  std::vector<double> h{0.3, 0.4};
  CHECK(clip_grad_norm(h, 1.0) == doctest::Approx(0.5));
  CHECK(h == std::vector<double>{0.3, 0.4});
  std::vector<double> k{30.0, 40.0};
  CHECK(clip_grad_norm(k, 0.0) == doctest::Approx(50.0));
  CHECK(k == std::vector<double>{30.0, 40.0});
}
