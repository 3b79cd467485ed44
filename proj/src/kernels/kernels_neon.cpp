// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

// AArch64 NEON variants (two double lanes). vfmaq_f64 is deliberately not
// used so the elementwise kernels match the scalar reference bit for bit.

#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "gtpo/kernels.hpp"

namespace gtpo::kernels {
namespace {

constexpr std::size_t kLanes = 2;

double max_value(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  double best = -std::numeric_limits<double>::infinity();
  if (n >= kLanes) {
    float64x2_t acc = vdupq_n_f64(best);
    for (; i + kLanes <= n; i += kLanes) acc = vmaxq_f64(acc, vld1q_f64(x.data() + i));
    best = vmaxvq_f64(acc);
  }
  for (; i < n; ++i) best = x[i] > best ? x[i] : best;
  return best;
}

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + kLanes <= n; i += kLanes) acc = vaddq_f64(acc, vld1q_f64(x.data() + i));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + kLanes <= n; i += kLanes)
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(x.data() + i), vld1q_f64(y.data() + i)));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    vst1q_f64(y.data() + i, vaddq_f64(vld1q_f64(y.data() + i), vmulq_f64(a, vld1q_f64(x.data() + i))));
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  const std::size_t n = x.size();
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(x.data() + i, vmulq_f64(vld1q_f64(x.data() + i), a));
  for (; i < n; ++i) x[i] = x[i] * alpha;
}

void add_scalar(double c, std::span<double> x) {
  const std::size_t n = x.size();
  const float64x2_t cv = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(x.data() + i, vaddq_f64(vld1q_f64(x.data() + i), cv));
  for (; i < n; ++i) x[i] = x[i] + c;
}

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamCoefficients& c) {
  const std::size_t n = params.size();
  const float64x2_t b1 = vdupq_n_f64(c.beta1);
  const float64x2_t b2 = vdupq_n_f64(c.beta2);
  const float64x2_t omb1 = vdupq_n_f64(1.0 - c.beta1);
  const float64x2_t omb2 = vdupq_n_f64(1.0 - c.beta2);
  const float64x2_t bc1 = vdupq_n_f64(c.bias_correction1);
  const float64x2_t bc2 = vdupq_n_f64(c.bias_correction2);
  const float64x2_t lr = vdupq_n_f64(c.lr);
  const float64x2_t eps = vdupq_n_f64(c.eps);
  const float64x2_t decay = vdupq_n_f64(c.lr * c.weight_decay);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t g = vld1q_f64(grads.data() + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m.data() + i)), vmulq_f64(omb1, g));
    const float64x2_t vi =
        vaddq_f64(vmulq_f64(b2, vld1q_f64(v.data() + i)), vmulq_f64(omb2, vmulq_f64(g, g)));
    vst1q_f64(m.data() + i, mi);
    vst1q_f64(v.data() + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, bc1);
    const float64x2_t v_hat = vdivq_f64(vi, bc2);
    const float64x2_t step = vmulq_f64(lr, vdivq_f64(m_hat, vaddq_f64(vsqrtq_f64(v_hat), eps)));
    const float64x2_t p = vld1q_f64(params.data() + i);
    vst1q_f64(params.data() + i, vsubq_f64(vsubq_f64(p, step), vmulq_f64(decay, p)));
  }
  if (i < n) {
    scalar_table().adam_update(params.subspan(i), grads.subspan(i), m.subspan(i), v.subspan(i), c);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{Backend::kNeon, &max_value, &sum,       &dot,
                                 &axpy,          &scale,     &add_scalar, &all_finite,
                                 &adam_update};
  return table;
}

}  // namespace gtpo::kernels
