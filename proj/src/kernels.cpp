#include "lightcone/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace lightcone::kernels {
namespace {

std::atomic<int>& active_slot() {
  static std::atomic<int> slot{static_cast<int>(detect_isa())};
  return slot;
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(LIGHTCONE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#if defined(LIGHTCONE_HAVE_AVX2)
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return avx2_table();
#endif
  (void)isa;
  return scalar_table();
}

Isa detect_isa() {
  if (const char* env = std::getenv("LIGHTCONE_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::Scalar;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

const KernelTable& active() { return table(active_isa()); }

Isa active_isa() { return static_cast<Isa>(active_slot().load(std::memory_order_relaxed)); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) isa = Isa::Scalar;
  active_slot().store(static_cast<int>(isa), std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace lightcone::kernels
