// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace gtpo::kernels {

enum class Backend : std::uint8_t { kScalar, kAvx2, kNeon };

std::string_view name(Backend backend);

struct AdamCoefficients {
  double lr = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double eps = 0.0;
  double weight_decay = 0.0;
  double bias_correction1 = 1.0;  // 1 - beta1^t
  double bias_correction2 = 1.0;  // 1 - beta2^t
};

// Inner loops shared by the objective, the policy and the optimizer.
//
// Elementwise kernels (axpy, scale, add_scalar, adam_update) produce
// bit-identical results on every backend: the vector paths use the same
// operation order as the scalar reference and never contract into FMA.
// Reductions (sum, dot) may reassociate and agree only to rounding.
// max_value and all_finite are exact on every backend.
struct KernelTable {
  Backend backend;
  double (*max_value)(std::span<const double> x);
  double (*sum)(std::span<const double> x);
  double (*dot)(std::span<const double> x, std::span<const double> y);
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
  void (*scale)(double alpha, std::span<double> x);
  void (*add_scalar)(double c, std::span<double> x);
  bool (*all_finite)(std::span<const double> x);
  void (*adam_update)(std::span<double> params, std::span<const double> grads,
                      std::span<double> m, std::span<double> v,
                      const AdamCoefficients& c);
};

const KernelTable& scalar_table();
#if defined(GTPO_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(GTPO_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// True when the backend was compiled in and the running CPU supports it.
bool is_supported(Backend backend);

/// Table for a specific backend; throws gtpo::Error if unsupported.
const KernelTable& table_for(Backend backend);

/// Process-wide table. Chosen on first use: the GTPO_KERNELS environment
/// variable (scalar|avx2|neon) if set, otherwise the best supported backend.
const KernelTable& active();

/// Overrides the process-wide table. Not meant to be flipped mid-run; results
/// of reductions depend on the backend.
void set_active(Backend backend);

}  // namespace gtpo::kernels
