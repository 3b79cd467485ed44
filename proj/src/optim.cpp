// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/optim.hpp"

#include <cmath>
#include <string>

#include "gtpo/error.hpp"
#include "gtpo/kernels.hpp"

namespace gtpo {

void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw Error(ErrorKind::kShapeMismatch, "adam_step: params/grads/state sizes differ");
  }
  const AdamConfig& cfg = state.config;
  if (!(cfg.lr > 0.0)) throw Error(ErrorKind::kInvalidInput, "adam_step: learning rate must be > 0");
  const auto& k = kernels::active();
  if (!k.all_finite(grads)) throw Error(ErrorKind::kNonFiniteGradient, "adam_step: gradient has NaN or Inf entries");

  const std::int64_t t = state.step + 1;
  kernels::AdamCoefficients c;
  c.lr = cfg.lr;
  c.beta1 = cfg.beta1;
  c.beta2 = cfg.beta2;
  c.eps = cfg.eps;
  c.weight_decay = cfg.weight_decay;
  c.bias_correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  c.bias_correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  k.adam_update(params, grads, state.m, state.v, c);
  state.step = t;
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr, double weight_decay) {
  if (params.size() != grads.size()) throw Error(ErrorKind::kShapeMismatch, "sgd_step: size mismatch");
  const auto& k = kernels::active();
  if (!k.all_finite(grads)) throw Error(ErrorKind::kNonFiniteGradient, "sgd_step: gradient has NaN or Inf entries");
  if (weight_decay != 0.0) k.scale(1.0 - lr * weight_decay, params);
  k.axpy(-lr, grads, params);
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  const auto& k = kernels::active();
  const double norm = std::sqrt(k.dot(grads, grads));
  if (max_norm > 0.0 && norm > max_norm) k.scale(max_norm / norm, grads);
  return norm;
}

}  // namespace gtpo
