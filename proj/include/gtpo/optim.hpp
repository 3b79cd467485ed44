// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gtpo {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Adam moments and step counter for a flat parameter vector.
struct OptimState {
  explicit OptimState(std::size_t n, AdamConfig config = {})
      : m(n, 0.0), v(n, 0.0), config(config) {}

  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  AdamConfig config;
};

/// Bias-corrected Adam with decoupled weight decay:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
/// A non-finite gradient rejects the step (kNonFiniteGradient) and leaves
/// params and state untouched.
void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state);

/// Plain gradient descent with decoupled weight decay.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr, double weight_decay = 0.0);

/// Rescales grads in place so their L2 norm is at most max_norm (no-op when
/// max_norm <= 0). Returns the norm before clipping.
double clip_grad_norm(std::span<double> grads, double max_norm);

}  // namespace gtpo
