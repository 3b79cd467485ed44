// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

// Portable reference kernels. Every vector backend is tested against these.

#include <cmath>
#include <limits>

#include "gtpo/kernels.hpp"

namespace gtpo::kernels {
namespace {

double max_value(std::span<const double> x) {
  double best = -std::numeric_limits<double>::infinity();
  for (double v : x) best = v > best ? v : best;
  return best;
}

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = y[i] + alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v = v * alpha;
}

void add_scalar(double c, std::span<double> x) {
  for (double& v : x) v = v + c;
}

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamCoefficients& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const double decay = c.lr * c.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double mi = c.beta1 * m[i] + one_minus_b1 * g;
    const double vi = c.beta2 * v[i] + one_minus_b2 * (g * g);
    m[i] = mi;
    v[i] = vi;
    const double m_hat = mi / c.bias_correction1;
    const double v_hat = vi / c.bias_correction2;
    const double step = c.lr * (m_hat / (std::sqrt(v_hat) + c.eps));
    const double p = params[i];
    params[i] = (p - step) - decay * p;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Backend::kScalar, &max_value, &sum,       &dot,
                                 &axpy,            &scale,     &add_scalar, &all_finite,
                                 &adam_update};
  return table;
}

}  // namespace gtpo::kernels
