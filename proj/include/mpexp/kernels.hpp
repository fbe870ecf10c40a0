#pragma once

// Row-parallel sparse kernels. The serial namespace is the reference; the omp
// namespace must agree with it bit for bit (rows are independent and each row
// is accumulated in the same order), which the tests check.

#include <span>

#include "mpexp/precision.hpp"
#include "mpexp/sparse.hpp"

namespace mpexp::kernels {

/// y = A x + D t, where D is an optional dense n_rows x p block stored
/// column-major and t its length-p multiplier. `values` replaces a.values so
/// callers can pass a pre-rounded copy.
struct SpmvArgs {
  const CsrMatrix& a;
  std::span<const double> values;
  std::span<const double> x;
  std::span<const double> dense;
  std::span<const double> tail;
  std::span<double> y;
};

namespace serial {
void spmv(const SpmvArgs& args);
/// Inputs (values, x, dense, tail) must already be representable in the target
/// format; this only rounds products and sums (op_level) or the final entry.
void spmv_chopped(const SpmvArgs& args, const Rounder& round, ChopMode mode);
void round(std::span<double> v, const Rounder& round);
}  // namespace serial

namespace omp {
void spmv(const SpmvArgs& args);
void spmv_chopped(const SpmvArgs& args, const Rounder& round, ChopMode mode);
void round(std::span<double> v, const Rounder& round);
/// Threads the omp variants will use (1 when built without OpenMP).
int max_threads();
}  // namespace omp

// Default dispatch used by the library.
inline void spmv(const SpmvArgs& args) { omp::spmv(args); }
inline void spmv_chopped(const SpmvArgs& args, const Rounder& r, ChopMode mode) { omp::spmv_chopped(args, r, mode); }
inline void round(std::span<double> v, const Rounder& r) { omp::round(v, r); }

/// True when any entry is +/-inf or NaN.
bool has_nonfinite(std::span<const double> v);

}  // namespace mpexp::kernels
