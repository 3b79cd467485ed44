// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/numeric.hpp"

#include <cmath>

#include "gtpo/kernels.hpp"

namespace gtpo {

double logsumexp(std::span<const double> logits) {
  const auto& k = kernels::active();
  const double m = k.max_value(logits);
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - m);
  return m + std::log(acc);
}

void softmax(std::span<const double> logits, std::span<double> out) {
  const auto& k = kernels::active();
  const double m = k.max_value(logits);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i] - m);
  const double total = k.sum(out);
  k.scale(1.0 / total, out);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax(logits, out);
  return out;
}

std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature) {
  std::vector<double> scaled(logits.begin(), logits.end());
  kernels::active().scale(1.0 / temperature, scaled);
  return softmax(scaled);
}

}  // namespace gtpo
