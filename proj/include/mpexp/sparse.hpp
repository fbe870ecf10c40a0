#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpexp/precision.hpp"

namespace mpexp {

using Index = std::ptrdiff_t;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Compressed sparse row matrix in working precision.
///
/// Column indices are strictly increasing within a row; there are no explicit
/// duplicates. Immutable once built, so it can be shared between solves.
struct CsrMatrix {
  struct Triplet {
    Index row;
    Index col;
    double value;
  };

  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Index> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<double> values;

  Index nnz() const { return static_cast<Index>(values.size()); }
  Index max_row_nnz() const;
  double norm_inf() const;

  /// Throws DimensionError when any structural invariant is broken.
  void validate() const;

  /// Sums duplicates and sorts columns; explicit zeros are kept.
  static CsrMatrix from_triplets(Index n_rows, Index n_cols, std::vector<Triplet> triplets);
  static CsrMatrix from_dense(const DenseMatrix& dense);
  static CsrMatrix identity(Index n);

  DenseMatrix to_dense() const;
  CsrMatrix scaled(double s) const;
  CsrMatrix transposed() const;
  /// Same structure, values rounded to `fmt`.
  CsrMatrix rounded(const FloatFormat& fmt) const;
};

/// Per-format count of full matrix-vector products, keyed by format name.
class MatvecCounters {
 public:
  void add(const FloatFormat& fmt, std::int64_t n = 1) { counts_[fmt.name] += n; }
  void add(const std::string& name, std::int64_t n = 1) { counts_[name] += n; }
  std::int64_t count(const std::string& name) const;
  std::int64_t total() const;
  const std::map<std::string, std::int64_t>& by_format() const { return counts_; }

  MatvecCounters& operator+=(const MatvecCounters& other);
  friend bool operator==(const MatvecCounters&, const MatvecCounters&) = default;

 private:
  std::map<std::string, std::int64_t> counts_;
};

enum class ChopMode {
  op_level,  // every product and partial sum rounded
  io_level,  // inputs and the final entry rounded, accumulation in binary64
};

ChopMode chop_mode_by_name(const std::string& name);
const char* to_string(ChopMode mode);

/// y = A x, accumulating each row left to right.
Vector matvec(const CsrMatrix& a, const Vector& x);

struct ChoppedProduct {
  Vector y;
  bool overflow = false;  // some entry is +/-inf or NaN
};

/// A x evaluated in `fmt`; the result is held in binary64. Increments
/// counters[fmt] once when `counters` is given.
ChoppedProduct matvec_chopped(const CsrMatrix& a, const Vector& x, const FloatFormat& fmt,
                              ChopMode mode = ChopMode::op_level, MatvecCounters* counters = nullptr);

/// k^2 x k^2 five-point Laplacian (4 on the diagonal, -1 for grid neighbours),
/// scaled by sign * scale. Same ordering as MATLAB's gallery('poisson', k).
CsrMatrix poisson2d(Index k, double scale = 1.0, int sign = 1);

/// Right-hand side (1 - r1^2)(1 - r2^2) exp(r1) on the interior grid
/// g_i = -1 + 2(i+1)/(k+1), ordered column-major like meshgrid(g, g)(:).
Vector poisson_rhs(Index k);

}  // namespace mpexp
