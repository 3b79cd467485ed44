// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2 variants. This translation unit is compiled with -mavx2 and without
// -mfma so the elementwise kernels round exactly like the scalar reference.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "gtpo/kernels.hpp"

namespace gtpo::kernels {
namespace {

constexpr std::size_t kLanes = 4;

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double max_value(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  double best = -std::numeric_limits<double>::infinity();
  if (n >= kLanes) {
    __m256d acc = _mm256_set1_pd(best);
    for (; i + kLanes <= n; i += kLanes) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x.data() + i));
    best = hmax(acc);
  }
  for (; i < n; ++i) best = x[i] > best ? x[i] : best;
  return best;
}

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + kLanes <= n; i += kLanes) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
    acc = _mm256_add_pd(acc, p);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d prod = _mm256_mul_pd(a, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(_mm256_loadu_pd(y.data() + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(x.data() + i, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), a));
  for (; i < n; ++i) x[i] = x[i] * alpha;
}

void add_scalar(double c, std::span<double> x) {
  const std::size_t n = x.size();
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(x.data() + i, _mm256_add_pd(_mm256_loadu_pd(x.data() + i), cv));
  for (; i < n; ++i) x[i] = x[i] + c;
}

bool all_finite(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  // x - x is 0 for finite x and NaN for inf/NaN.
  __m256d bad = _mm256_setzero_pd();
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    bad = _mm256_or_pd(bad, _mm256_cmp_pd(_mm256_sub_pd(v, v), _mm256_setzero_pd(), _CMP_NEQ_UQ));
  }
  if (_mm256_movemask_pd(bad) != 0) return false;
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamCoefficients& c) {
  const std::size_t n = params.size();
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  const __m256d decay = _mm256_set1_pd(c.lr * c.weight_decay);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d g = _mm256_loadu_pd(grads.data() + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m.data() + i)),
                                     _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v.data() + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m.data() + i, mi);
    _mm256_storeu_pd(v.data() + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step =
        _mm256_mul_pd(lr, _mm256_div_pd(m_hat, _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps)));
    const __m256d p = _mm256_loadu_pd(params.data() + i);
    _mm256_storeu_pd(params.data() + i, _mm256_sub_pd(_mm256_sub_pd(p, step), _mm256_mul_pd(decay, p)));
  }
  if (i < n) {
    scalar_table().adam_update(params.subspan(i), grads.subspan(i), m.subspan(i), v.subspan(i), c);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Backend::kAvx2, &max_value, &sum,       &dot,
                                 &axpy,          &scale,     &add_scalar, &all_finite,
                                 &adam_update};
  return table;
}

}  // namespace gtpo::kernels
