#pragma once

// Inner-loop kernels for complex vectors. Each kernel has a scalar reference
// implementation and, on x86-64, an AVX2/FMA variant chosen at runtime.
// Complex data is std::complex<double> laid out as interleaved (re, im).

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "lightcone/types.hpp"

namespace lightcone::kernels {

enum class Isa { Scalar, Avx2 };

/// Borrowed view of a CSR matrix with complex entries.
struct CsrView {
  std::size_t rows = 0;
  const std::size_t* row_ptr = nullptr;  // rows + 1 entries
  const std::uint32_t* col = nullptr;
  const cplx* val = nullptr;
};

struct KernelTable {
  /// y = A x
  void (*spmv)(const CsrView& a, const cplx* x, cplx* y);
  /// out = alpha * hv + beta * cur - prev  (Chebyshev three-term step)
  void (*cheb_step)(std::size_t n, double alpha, const cplx* hv, double beta,
                    const cplx* cur, const cplx* prev, cplx* out);
  /// y += a x
  void (*axpy)(std::size_t n, cplx a, const cplx* x, cplx* y);
  /// sum conj(x_i) y_i
  cplx (*dotc)(std::size_t n, const cplx* x, const cplx* y);
  /// sum x_i y_i
  cplx (*dotu)(std::size_t n, const cplx* x, const cplx* y);
};

const KernelTable& scalar_table();
#if defined(LIGHTCONE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

bool isa_available(Isa isa);
const KernelTable& table(Isa isa);

/// Best ISA supported by this CPU, unless LIGHTCONE_SIMD=scalar is set.
Isa detect_isa();

/// Kernels used by the library. Selected once on first use; override with
/// set_active_isa (tests) or the LIGHTCONE_SIMD environment variable.
const KernelTable& active();
Isa active_isa();
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace lightcone::kernels
