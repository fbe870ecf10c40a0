#include "mpexp/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mpexp::kernels {

namespace {

// Below this many rows the omp variants stay serial; thread start-up would dominate.
constexpr Index kParallelRows = 2048;

inline double row_working(const SpmvArgs& s, Index i) {
  const Index n = s.a.n_rows;
  double acc = 0.0;
  for (Index k = s.a.row_ptr[i]; k < s.a.row_ptr[i + 1]; ++k) acc += s.values[k] * s.x[s.a.col_idx[k]];
  for (std::size_t c = 0; c < s.tail.size(); ++c) acc += s.dense[c * n + i] * s.tail[c];
  return acc;
}

inline double row_op_level(const SpmvArgs& s, Index i, const Rounder& r) {
  const Index n = s.a.n_rows;
  double acc = 0.0;
  for (Index k = s.a.row_ptr[i]; k < s.a.row_ptr[i + 1]; ++k) acc = r(acc + r(s.values[k] * s.x[s.a.col_idx[k]]));
  for (std::size_t c = 0; c < s.tail.size(); ++c) acc = r(acc + r(s.dense[c * n + i] * s.tail[c]));
  return acc;
}

inline double row_chopped(const SpmvArgs& s, Index i, const Rounder& r, ChopMode mode) {
  return mode == ChopMode::op_level ? row_op_level(s, i, r) : r(row_working(s, i));
}

}  // namespace

namespace serial {

void spmv(const SpmvArgs& args) {
  for (Index i = 0; i < args.a.n_rows; ++i) args.y[i] = row_working(args, i);
}

void spmv_chopped(const SpmvArgs& args, const Rounder& round, ChopMode mode) {
  if (round.identity()) return serial::spmv(args);
  for (Index i = 0; i < args.a.n_rows; ++i) args.y[i] = row_chopped(args, i, round, mode);
}

void round(std::span<double> v, const Rounder& round) {
  if (round.identity()) return;
  for (double& x : v) x = round(x);
}

}  // namespace serial

namespace omp {

void spmv(const SpmvArgs& args) {
  const Index n = args.a.n_rows;
#pragma omp parallel for schedule(static) if (n >= kParallelRows)
  for (Index i = 0; i < n; ++i) args.y[i] = row_working(args, i);
}

void spmv_chopped(const SpmvArgs& args, const Rounder& round, ChopMode mode) {
  if (round.identity()) return omp::spmv(args);
  const Index n = args.a.n_rows;
#pragma omp parallel for schedule(static) if (n >= kParallelRows)
  for (Index i = 0; i < n; ++i) args.y[i] = row_chopped(args, i, round, mode);
}

void round(std::span<double> v, const Rounder& round) {
  if (round.identity()) return;
  const auto n = static_cast<Index>(v.size());
#pragma omp parallel for schedule(static) if (n >= kParallelRows)
  for (Index i = 0; i < n; ++i) v[i] = round(v[i]);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace omp

bool has_nonfinite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return true;
  return false;
}

}  // namespace mpexp::kernels
