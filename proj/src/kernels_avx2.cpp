// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "lightcone/kernels.hpp"

namespace lightcone::kernels {
namespace {

// [ar, ai] * [xr, xi] for two packed complex numbers per 256-bit lane pair.
inline __m256d cmul2(__m256d v, __m256d x) {
  const __m256d vr = _mm256_movedup_pd(v);
  const __m256d vi = _mm256_permute_pd(v, 0xF);
  const __m256d xs = _mm256_permute_pd(x, 0x5);
  return _mm256_fmaddsub_pd(vr, x, _mm256_mul_pd(vi, xs));
}

inline __m128d cmul1(__m128d v, __m128d x) {
  const __m128d vr = _mm_movedup_pd(v);
  const __m128d vi = _mm_permute_pd(v, 0x3);
  const __m128d xs = _mm_permute_pd(x, 0x1);
  return _mm_fmaddsub_pd(vr, x, _mm_mul_pd(vi, xs));
}

inline __m128d fold(__m256d a) {
  return _mm_add_pd(_mm256_castpd256_pd128(a), _mm256_extractf128_pd(a, 1));
}

inline cplx to_cplx(__m128d a) {
  alignas(16) double out[2];
  _mm_store_pd(out, a);
  return {out[0], out[1]};
}

void spmv_avx2(const CsrView& a, const cplx* x, cplx* y) {
  const auto* xd = reinterpret_cast<const double*>(x);
  for (std::size_t r = 0; r < a.rows; ++r) {
    std::size_t k = a.row_ptr[r];
    const std::size_t end = a.row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 2 <= end; k += 2) {
      const __m128d x0 = _mm_loadu_pd(xd + 2 * a.col[k]);
      const __m128d x1 = _mm_loadu_pd(xd + 2 * a.col[k + 1]);
      const __m256d xv = _mm256_set_m128d(x1, x0);
      const __m256d v = _mm256_loadu_pd(reinterpret_cast<const double*>(a.val + k));
      acc = _mm256_add_pd(acc, cmul2(v, xv));
    }
    __m128d acc1 = fold(acc);
    if (k < end) {
      const __m128d v = _mm_loadu_pd(reinterpret_cast<const double*>(a.val + k));
      acc1 = _mm_add_pd(acc1, cmul1(v, _mm_loadu_pd(xd + 2 * a.col[k])));
    }
    _mm_storeu_pd(reinterpret_cast<double*>(y + r), acc1);
  }
}

void cheb_step_avx2(std::size_t n, double alpha, const cplx* hv, double beta, const cplx* cur,
                    const cplx* prev, cplx* out) {
  const auto* h = reinterpret_cast<const double*>(hv);
  const auto* c = reinterpret_cast<const double*>(cur);
  const auto* p = reinterpret_cast<const double*>(prev);
  auto* o = reinterpret_cast<double*>(out);
  const std::size_t m = 2 * n;
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d t = _mm256_fmsub_pd(vb, _mm256_loadu_pd(c + i), _mm256_loadu_pd(p + i));
    _mm256_storeu_pd(o + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(h + i), t));
  }
  for (; i < m; ++i) o[i] = alpha * h[i] + beta * c[i] - p[i];
}

void axpy_avx2(std::size_t n, cplx a, const cplx* x, cplx* y) {
  const auto* xd = reinterpret_cast<const double*>(x);
  auto* yd = reinterpret_cast<double*>(y);
  const __m256d ar = _mm256_set1_pd(a.real());
  const __m256d ai = _mm256_set1_pd(a.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    const __m256d prod = _mm256_fmaddsub_pd(ar, xv, _mm256_mul_pd(ai, _mm256_permute_pd(xv, 0x5)));
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * i), prod));
  }
  if (i < n) {
    const __m128d xv = _mm_loadu_pd(xd + 2 * i);
    const __m128d prod = _mm_fmaddsub_pd(_mm256_castpd256_pd128(ar), xv,
                                         _mm_mul_pd(_mm256_castpd256_pd128(ai), _mm_permute_pd(xv, 0x1)));
    _mm_storeu_pd(yd + 2 * i, _mm_add_pd(_mm_loadu_pd(yd + 2 * i), prod));
  }
}

// acc_direct holds x*y lane-wise, acc_swap holds x*swap(y).
inline void dot_accumulate(std::size_t n, const cplx* x, const cplx* y, __m128d& direct, __m128d& swapped) {
  const auto* xd = reinterpret_cast<const double*>(x);
  const auto* yd = reinterpret_cast<const double*>(y);
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    const __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    a1 = _mm256_fmadd_pd(xv, yv, a1);
    a2 = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0x5), a2);
  }
  direct = fold(a1);
  swapped = fold(a2);
  if (i < n) {
    const __m128d xv = _mm_loadu_pd(xd + 2 * i);
    const __m128d yv = _mm_loadu_pd(yd + 2 * i);
    direct = _mm_fmadd_pd(xv, yv, direct);
    swapped = _mm_fmadd_pd(xv, _mm_permute_pd(yv, 0x1), swapped);
  }
}

cplx dotc_avx2(std::size_t n, const cplx* x, const cplx* y) {
  __m128d d;
  __m128d s;
  dot_accumulate(n, x, y, d, s);
  const cplx dd = to_cplx(d);
  const cplx ss = to_cplx(s);
  return {dd.real() + dd.imag(), ss.real() - ss.imag()};
}

cplx dotu_avx2(std::size_t n, const cplx* x, const cplx* y) {
  __m128d d;
  __m128d s;
  dot_accumulate(n, x, y, d, s);
  const cplx dd = to_cplx(d);
  const cplx ss = to_cplx(s);
  return {dd.real() - dd.imag(), ss.real() + ss.imag()};
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{spmv_avx2, cheb_step_avx2, axpy_avx2, dotc_avx2, dotu_avx2};
  return t;
}

}  // namespace lightcone::kernels
