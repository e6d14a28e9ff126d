#include "lightcone/kernels.hpp"

namespace lightcone::kernels {
namespace {

// Plain real arithmetic; std::complex operator* would route through the
// Annex G NaN-recovery path.
inline void mul_acc(double ar, double ai, double br, double bi, double& re, double& im) {
  re += ar * br - ai * bi;
  im += ar * bi + ai * br;
}

void spmv_scalar(const CsrView& a, const cplx* x, cplx* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const cplx v = a.val[k];
      const cplx u = x[a.col[k]];
      mul_acc(v.real(), v.imag(), u.real(), u.imag(), re, im);
    }
    y[r] = {re, im};
  }
}

void cheb_step_scalar(std::size_t n, double alpha, const cplx* hv, double beta, const cplx* cur,
                      const cplx* prev, cplx* out) {
  const auto* h = reinterpret_cast<const double*>(hv);
  const auto* c = reinterpret_cast<const double*>(cur);
  const auto* p = reinterpret_cast<const double*>(prev);
  auto* o = reinterpret_cast<double*>(out);
  for (std::size_t i = 0; i < 2 * n; ++i) o[i] = alpha * h[i] + beta * c[i] - p[i];
}

void axpy_scalar(std::size_t n, cplx a, const cplx* x, cplx* y) {
  const double ar = a.real();
  const double ai = a.imag();
  for (std::size_t i = 0; i < n; ++i) {
    double re = y[i].real();
    double im = y[i].imag();
    mul_acc(ar, ai, x[i].real(), x[i].imag(), re, im);
    y[i] = {re, im};
  }
}

cplx dotc_scalar(std::size_t n, const cplx* x, const cplx* y) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) mul_acc(x[i].real(), -x[i].imag(), y[i].real(), y[i].imag(), re, im);
  return {re, im};
}

cplx dotu_scalar(std::size_t n, const cplx* x, const cplx* y) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) mul_acc(x[i].real(), x[i].imag(), y[i].real(), y[i].imag(), re, im);
  return {re, im};
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{spmv_scalar, cheb_step_scalar, axpy_scalar, dotc_scalar, dotu_scalar};
  return t;
}

}  // namespace lightcone::kernels
