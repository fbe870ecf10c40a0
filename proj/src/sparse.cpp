#include "mpexp/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mpexp/errors.hpp"
#include "mpexp/kernels.hpp"

namespace mpexp {

Index CsrMatrix::max_row_nnz() const {
  Index best = 0;
  for (Index i = 0; i < n_rows; ++i) best = std::max(best, row_ptr[i + 1] - row_ptr[i]);
  return best;
}

double CsrMatrix::norm_inf() const {
  double best = 0.0;
  for (Index i = 0; i < n_rows; ++i) {
    double s = 0.0;
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += std::fabs(values[k]);
    best = std::max(best, s);
  }
  return best;
}

void CsrMatrix::validate() const {
  if (n_rows < 0 || n_cols < 0) throw DimensionError("negative matrix dimension");
  if (static_cast<Index>(row_ptr.size()) != n_rows + 1) throw DimensionError("row_ptr must have n_rows + 1 entries");
  if (row_ptr.front() != 0) throw DimensionError("row_ptr[0] must be 0");
  if (row_ptr.back() != nnz() || col_idx.size() != values.size())
    throw DimensionError("row_ptr[n_rows] must equal the number of stored entries");
  for (Index i = 0; i < n_rows; ++i) {
    if (row_ptr[i + 1] < row_ptr[i]) throw DimensionError("row_ptr is not nondecreasing");
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col_idx[k] < 0 || col_idx[k] >= n_cols) throw DimensionError("column index out of range");
      if (k > row_ptr[i] && col_idx[k] <= col_idx[k - 1])
        throw DimensionError("column indices must be strictly increasing within a row");
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(Index n_rows, Index n_cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.row >= n_rows || t.col < 0 || t.col >= n_cols)
      throw DimensionError("triplet index out of range");
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  CsrMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_ptr.assign(n_rows + 1, 0);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (!m.col_idx.empty() && k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      m.values.back() += t.value;
      continue;
    }
    m.col_idx.push_back(t.col);
    m.values.push_back(t.value);
    ++m.row_ptr[t.row + 1];
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<Triplet> t;
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) t.push_back({i, j, dense(i, j)});
  return from_triplets(dense.rows(), dense.cols(), std::move(t));
}

CsrMatrix CsrMatrix::identity(Index n) {
  CsrMatrix m;
  m.n_rows = m.n_cols = n;
  m.row_ptr.resize(n + 1);
  std::iota(m.row_ptr.begin(), m.row_ptr.end(), Index{0});
  m.col_idx.resize(n);
  std::iota(m.col_idx.begin(), m.col_idx.end(), Index{0});
  m.values.assign(n, 1.0);
  return m;
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d = DenseMatrix::Zero(n_rows, n_cols);
  for (Index i = 0; i < n_rows; ++i)
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) d(i, col_idx[k]) = values[k];
  return d;
}

CsrMatrix CsrMatrix::scaled(double s) const {
  CsrMatrix m = *this;
  for (double& v : m.values) v *= s;
  return m;
}

CsrMatrix CsrMatrix::transposed() const {
  std::vector<Triplet> t;
  t.reserve(values.size());
  for (Index i = 0; i < n_rows; ++i)
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) t.push_back({col_idx[k], i, values[k]});
  return from_triplets(n_cols, n_rows, std::move(t));
}

CsrMatrix CsrMatrix::rounded(const FloatFormat& fmt) const {
  CsrMatrix m = *this;
  round_in_place(m.values, fmt);
  return m;
}

std::int64_t MatvecCounters::count(const std::string& name) const {
  auto it = counts_.find(name);
  return it == counts_.end() ? 0 : it->second;
}

std::int64_t MatvecCounters::total() const {
  std::int64_t t = 0;
  for (const auto& [name, n] : counts_) t += n;
  return t;
}

MatvecCounters& MatvecCounters::operator+=(const MatvecCounters& other) {
  for (const auto& [name, n] : other.counts_) counts_[name] += n;
  return *this;
}

ChopMode chop_mode_by_name(const std::string& name) {
  if (name == "op" || name == "op-level") return ChopMode::op_level;
  if (name == "io" || name == "io-level") return ChopMode::io_level;
  throw std::invalid_argument("unknown chop mode '" + name + "' (expected op or io)");
}

const char* to_string(ChopMode mode) { return mode == ChopMode::op_level ? "op" : "io"; }

namespace {
void check_product_dims(const CsrMatrix& a, const Vector& x) {
  if (x.size() != a.n_cols)
    throw DimensionError("matvec: vector length " + std::to_string(x.size()) + " does not match " +
                         std::to_string(a.n_cols) + " columns");
}
}  // namespace

Vector matvec(const CsrMatrix& a, const Vector& x) {
  check_product_dims(a, x);
  Vector y(a.n_rows);
  kernels::spmv({a, a.values, {x.data(), static_cast<std::size_t>(x.size())}, {}, {}, {y.data(), static_cast<std::size_t>(y.size())}});
  return y;
}

ChoppedProduct matvec_chopped(const CsrMatrix& a, const Vector& x, const FloatFormat& fmt, ChopMode mode,
                              MatvecCounters* counters) {
  check_product_dims(a, x);
  const Rounder r(fmt);
  ChoppedProduct out{Vector(a.n_rows), false};
  std::vector<double> values = a.values;
  Vector xr = x;
  kernels::round(values, r);
  kernels::round({xr.data(), static_cast<std::size_t>(xr.size())}, r);
  kernels::spmv_chopped({a, values, {xr.data(), static_cast<std::size_t>(xr.size())}, {}, {},
                         {out.y.data(), static_cast<std::size_t>(out.y.size())}},
                        r, mode);
  out.overflow = kernels::has_nonfinite({out.y.data(), static_cast<std::size_t>(out.y.size())});
  if (counters) counters->add(fmt);
  return out;
}

CsrMatrix poisson2d(Index k, double scale, int sign) {
  if (k < 1) throw std::invalid_argument("poisson2d: k must be at least 1");
  if (sign != 1 && sign != -1) throw std::invalid_argument("poisson2d: sign must be +1 or -1");
  const double s = sign * scale;
  const Index n = k * k;
  std::vector<CsrMatrix::Triplet> t;
  t.reserve(5 * n);
  for (Index c = 0; c < k; ++c) {
    for (Index r = 0; r < k; ++r) {
      const Index i = r + k * c;
      if (c > 0) t.push_back({i, i - k, -s});
      if (r > 0) t.push_back({i, i - 1, -s});
      t.push_back({i, i, 4.0 * s});
      if (r + 1 < k) t.push_back({i, i + 1, -s});
      if (c + 1 < k) t.push_back({i, i + k, -s});
    }
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

Vector poisson_rhs(Index k) {
  if (k < 1) throw std::invalid_argument("poisson_rhs: k must be at least 1");
  Vector g(k);
  for (Index i = 0; i < k; ++i) g[i] = -1.0 + 2.0 * static_cast<double>(i + 1) / static_cast<double>(k + 1);
  Vector b(k * k);
  for (Index c = 0; c < k; ++c) {
    for (Index r = 0; r < k; ++r) {
      const double r1 = g[c];
      const double r2 = g[r];
      b[r + k * c] = (1.0 - r1 * r1) * (1.0 - r2 * r2) * std::exp(r1);
    }
  }
  return b;
}

}  // namespace mpexp
