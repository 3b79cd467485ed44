// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "gtpo/error.hpp"
#include "gtpo/kernels.hpp"

namespace gtpo::kernels {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};

bool cpu_has_avx2() {
#if defined(GTPO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const KernelTable* best_available() {
  if (is_supported(Backend::kAvx2)) return &table_for(Backend::kAvx2);
  if (is_supported(Backend::kNeon)) return &table_for(Backend::kNeon);
  return &scalar_table();
}

const KernelTable* initial_choice() {
  const char* env = std::getenv("GTPO_KERNELS");
  if (env == nullptr || *env == '\0') return best_available();
  const std::string want(env);
  for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    if (want == name(b)) return &table_for(b);
  }
  throw Error(ErrorKind::kConfig, "GTPO_KERNELS must be scalar, avx2 or neon (got '" + want + "')");
}

}  // namespace

std::string_view name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

bool is_supported(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
    case Backend::kNeon:
#if defined(GTPO_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Backend backend) {
  if (!is_supported(backend)) {
    throw Error(ErrorKind::kConfig,
                "kernel backend '" + std::string(name(backend)) + "' is not available on this CPU/build");
  }
  switch (backend) {
#if defined(GTPO_HAVE_AVX2)
    case Backend::kAvx2:
      return avx2_table();
#endif
#if defined(GTPO_HAVE_NEON)
    case Backend::kNeon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    const KernelTable* chosen = initial_choice();
    g_active.compare_exchange_strong(t, chosen, std::memory_order_acq_rel);
    t = g_active.load(std::memory_order_acquire);
  }
  return *t;
}

void set_active(Backend backend) { g_active.store(&table_for(backend), std::memory_order_release); }

}  // namespace gtpo::kernels
