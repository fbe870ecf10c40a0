#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpexp/precision.hpp"
#include "mpexp/sparse.hpp"

namespace mpexp {

/// Sentinel threshold meaning "never switch".
inline constexpr int kNever = std::numeric_limits<int>::max();

/// Which precision the Arnoldi matrix-vector products use, by iteration.
///
/// With 1-based Arnoldi index j, the product that creates basis vector j+1 is
/// done in working precision while j+1 <= mchop1, in fmt1 while j+1 <= mchop2,
/// and in fmt2 afterwards. (0, 0) therefore puts every product in fmt2 and
/// (kNever, kNever) keeps everything in binary64.
struct PrecisionSchedule {
  int mchop1 = kNever;
  int mchop2 = kNever;
  FloatFormat fmt1 = formats::fp32();
  FloatFormat fmt2 = formats::fp16();
  ChopMode mode = ChopMode::op_level;

  static PrecisionSchedule working();
  static PrecisionSchedule uniform(const FloatFormat& fmt, ChopMode mode = ChopMode::op_level);
  static PrecisionSchedule mixed(int mchop1, int mchop2, const FloatFormat& fmt2,
                                 const FloatFormat& fmt1 = formats::fp32(), ChopMode mode = ChopMode::op_level);

  /// 0 = working precision, 1 = fmt1, 2 = fmt2 for Arnoldi step j (1-based).
  int stage_for(int j) const;
  const FloatFormat& format_for(int j) const;
  bool all_working() const;
  /// Throws std::invalid_argument unless 0 <= mchop1 <= mchop2 and finite thresholds are <= m_max.
  void validate(int m_max) const;
  std::string describe() const;
};

/// The (N+p) x (N+p) operator [[A, B], [0, K]] with K the upward shift.
///
/// B's columns are ordered [b_p, ..., b_1], so exp(tau * op) applied to
/// [b_0; 0, ..., 0, 1] has top block sum_k tau^k phi_k(tau A) b_k.
class AugmentedOperator {
 public:
  AugmentedOperator(CsrMatrix a, DenseMatrix b);

  Index n() const { return a_.n_rows; }
  int p() const { return static_cast<int>(b_.cols()); }
  Index size() const { return n() + p(); }
  const CsrMatrix& a() const { return a_; }
  const DenseMatrix& b() const { return b_; }

  /// out = op * in with the top block computed in `fmt`. Returns false when the
  /// top block contains inf/NaN.
  bool apply(const Vector& in, Vector& out, const FloatFormat& fmt, ChopMode mode) const;

  DenseMatrix to_dense() const;

 private:
  struct Rounded {
    FloatFormat fmt;
    std::vector<double> a_values;
    std::vector<double> b_values;
  };
  const Rounded& rounded(const FloatFormat& fmt) const;

  CsrMatrix a_;
  DenseMatrix b_;
  mutable std::vector<Rounded> cache_;
  mutable std::vector<double> scratch_;
};

/// Krylov basis and Hessenberg matrix of one Arnoldi run.
struct KrylovWorkspace {
  std::vector<Vector> V;  // V[0..j] when not happy, V[0..j-1] after a breakdown
  DenseMatrix H;          // at least (j+1) x j; entries outside the IOP band stay zero
  int j = 0;              // completed Arnoldi steps
  double beta = 0.0;
  bool happy = false;

  // Product op * V[j], computed early for the error estimate and reused by
  // the next Arnoldi step.
  std::optional<Vector> lookahead;

  /// Resets to the single normalized vector v / |v|. v must be nonzero.
  void start(const Vector& v);
};

struct ArnoldiOptions {
  /// Breakdown when |w| <= happy_tol * |op v_j| after orthogonalization.
  double happy_tol = 1e-12;
};

/// Extends the basis until ws.j == m or a happy breakdown. Each new vector is
/// orthogonalized against the two most recent ones only. Throws OverflowError
/// naming the format when a product is not finite.
void iop_arnoldi(const AugmentedOperator& op, KrylovWorkspace& ws, int m, const PrecisionSchedule& schedule,
                 MatvecCounters& counters, const ArnoldiOptions& opts = {});

/// |op V[j]|, computing and caching the lookahead product when needed.
double lookahead_norm(const AugmentedOperator& op, KrylovWorkspace& ws, const PrecisionSchedule& schedule,
                      MatvecCounters& counters);

/// Error-augmented Hessenberg matrix of size j+2 (j after a breakdown).
DenseMatrix augmented_hessenberg(const KrylovWorkspace& ws);

struct LocalError {
  double err = 0.0;
  int order = 1;  // exponent denominator for the step-size update
};

/// Local error of beta V exp(tau H) e1 from F = exp(tau * augmented_hessenberg):
/// e1 = beta |F(m,0)|, e2 = beta |F(m+1,0)| |op v_{m+1}|, then the classical
/// three-way choice between e1, e2 and e1 e2 / (e1 - e2). Zero when F has no
/// augmentation rows (breakdown).
LocalError krylov_error_estimate(const DenseMatrix& f, int m, double beta, double avnorm);

struct KrylovOptions {
  double tol = 1e-8;  // local error per unit of the substep interval, relative to the state norm
  int m_init = 10;
  int m_max = 128;
  PrecisionSchedule schedule = PrecisionSchedule::working();
  int max_substeps = 200000;
  int max_rejections = 100;  // consecutive rejections within one substep
  double happy_tol = 1e-12;
  bool balance = true;  // power-of-two scaling between B and the tail
};

struct KrylovResult {
  Vector w;
  MatvecCounters counters;
  int substeps = 0;
  int rejections = 0;
  int final_m = 0;
  std::int64_t arnoldi_steps = 0;      // products that became basis vectors
  std::int64_t estimate_products = 0;  // lookahead products used only by an error estimate
  std::int64_t products_below_working = 0;
  std::int64_t products_below_fmt1 = 0;
};

/// sum_{k=0}^{p} t^k phi_k(t A) b_k, p = b.size() - 1.
///
/// The operator is pre-scaled (A <- tA, b_k <- t^k b_k) and the augmented
/// system is advanced over substeps of [0, 1]. Each substep grows an IOP basis
/// from m_init towards m_max until the local error test passes, then shrinks
/// the substep if m_max is not enough. Trailing zero b_k are dropped.
KrylovResult phi_combination(double t, const CsrMatrix& a, std::span<const Vector> b, const KrylovOptions& opts);

}  // namespace mpexp
