#include "mpexp/phikrylov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mpexp/dense.hpp"
#include "mpexp/errors.hpp"
#include "mpexp/kernels.hpp"

namespace mpexp {

namespace {

std::span<const double> cspan(const Vector& v, Index offset, Index len) {
  return {v.data() + offset, static_cast<std::size_t>(len)};
}
std::span<double> mspan(Vector& v, Index offset, Index len) { return {v.data() + offset, static_cast<std::size_t>(len)}; }

const FloatFormat& working_format() {
  static const FloatFormat fmt = formats::fp64();
  return fmt;
}

}  // namespace

// --- PrecisionSchedule -----------------------------------------------------

PrecisionSchedule PrecisionSchedule::working() { return {}; }

PrecisionSchedule PrecisionSchedule::uniform(const FloatFormat& fmt, ChopMode mode) {
  PrecisionSchedule s;
  s.mchop1 = 0;
  s.mchop2 = 0;
  s.fmt1 = fmt;
  s.fmt2 = fmt;
  s.mode = mode;
  return s;
}

PrecisionSchedule PrecisionSchedule::mixed(int mchop1, int mchop2, const FloatFormat& fmt2, const FloatFormat& fmt1,
                                           ChopMode mode) {
  PrecisionSchedule s;
  s.mchop1 = mchop1;
  s.mchop2 = mchop2;
  s.fmt1 = fmt1;
  s.fmt2 = fmt2;
  s.mode = mode;
  return s;
}

int PrecisionSchedule::stage_for(int j) const {
  // j + 1 > mchop, written to stay clear of overflow when mchop == kNever.
  if (j >= mchop2) return fmt2.is_working() ? 0 : 2;
  if (j >= mchop1) return fmt1.is_working() ? 0 : 1;
  return 0;
}

const FloatFormat& PrecisionSchedule::format_for(int j) const {
  if (j >= mchop2) return fmt2;
  if (j >= mchop1) return fmt1;
  return working_format();
}

bool PrecisionSchedule::all_working() const {
  return (mchop1 == kNever || fmt1.is_working()) && (mchop2 == kNever || fmt2.is_working());
}

void PrecisionSchedule::validate(int m_max) const {
  if (mchop1 < 0 || mchop2 < 0) throw std::invalid_argument("mchop thresholds must be nonnegative");
  if (mchop1 > mchop2) throw std::invalid_argument("mchop1 must not exceed mchop2");
  if (mchop2 != kNever && mchop2 > m_max) throw std::invalid_argument("mchop2 exceeds the maximum basis size");
}

std::string PrecisionSchedule::describe() const {
  auto th = [](int m) { return m == kNever ? std::string("inf") : std::to_string(m); };
  std::ostringstream ss;
  ss << "mchop1=" << th(mchop1) << " mchop2=" << th(mchop2) << " fmt1=" << fmt1.name << " fmt2=" << fmt2.name
     << " mode=" << to_string(mode);
  return ss.str();
}

// --- AugmentedOperator -----------------------------------------------------

AugmentedOperator::AugmentedOperator(CsrMatrix a, DenseMatrix b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.n_rows != a_.n_cols) throw DimensionError("augmented operator needs a square matrix");
  if (b_.cols() > 0 && b_.rows() != a_.n_rows) throw DimensionError("B must have as many rows as A");
  if (b_.cols() == 0) b_.resize(a_.n_rows, 0);
}

const AugmentedOperator::Rounded& AugmentedOperator::rounded(const FloatFormat& fmt) const {
  for (const auto& r : cache_)
    if (r.fmt == fmt) return r;
  Rounded r{fmt, a_.values, std::vector<double>(b_.data(), b_.data() + b_.size())};
  round_in_place(r.a_values, fmt);
  round_in_place(r.b_values, fmt);
  cache_.push_back(std::move(r));
  return cache_.back();
}

bool AugmentedOperator::apply(const Vector& in, Vector& out, const FloatFormat& fmt, ChopMode mode) const {
  const Index n = this->n();
  const int p = this->p();
  if (in.size() != size()) throw DimensionError("augmented operator: input has wrong length");
  out.resize(size());

  if (fmt.is_working()) {
    kernels::spmv({a_, a_.values, cspan(in, 0, n), {b_.data(), static_cast<std::size_t>(b_.size())}, cspan(in, n, p),
                   mspan(out, 0, n)});
  } else {
    const Rounder round(fmt);
    const Rounded& r = rounded(fmt);
    scratch_.assign(in.data(), in.data() + in.size());
    kernels::round(scratch_, round);
    const std::span<const double> x(scratch_);
    kernels::spmv_chopped({a_, r.a_values, x.subspan(0, n), r.b_values, x.subspan(n, p), mspan(out, 0, n)}, round,
                          mode);
  }
  for (int i = 0; i + 1 < p; ++i) out[n + i] = in[n + i + 1];
  if (p > 0) out[n + p - 1] = 0.0;
  return !kernels::has_nonfinite(cspan(out, 0, n));
}

DenseMatrix AugmentedOperator::to_dense() const {
  const Index n = this->n();
  const int p = this->p();
  DenseMatrix d = DenseMatrix::Zero(size(), size());
  d.topLeftCorner(n, n) = a_.to_dense();
  if (p > 0) d.topRightCorner(n, p) = b_;
  for (int i = 0; i + 1 < p; ++i) d(n + i, n + i + 1) = 1.0;
  return d;
}

// --- Arnoldi ---------------------------------------------------------------

void KrylovWorkspace::start(const Vector& v) {
  beta = v.norm();
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("Krylov start vector must be nonzero and finite");
  V.clear();
  V.push_back(v / beta);
  H = DenseMatrix::Zero(0, 0);
  j = 0;
  happy = false;
  lookahead.reset();
}

namespace {

Vector product(const AugmentedOperator& op, const Vector& v, int step, const PrecisionSchedule& schedule,
               MatvecCounters& counters) {
  const FloatFormat& fmt = schedule.format_for(step);
  Vector w;
  const bool finite = op.apply(v, w, fmt, schedule.mode);
  counters.add(fmt);
  if (!finite)
    throw OverflowError(fmt.name, "non-finite value in an Arnoldi product computed in " + fmt.name + " (step " +
                                      std::to_string(step) + ")");
  return w;
}

}  // namespace

void iop_arnoldi(const AugmentedOperator& op, KrylovWorkspace& ws, int m, const PrecisionSchedule& schedule,
                 MatvecCounters& counters, const ArnoldiOptions& opts) {
  if (ws.V.empty()) throw Error("iop_arnoldi: workspace has no start vector");
  if (ws.H.rows() < m + 1 || ws.H.cols() < m) {
    const Index rows = std::max<Index>(ws.H.rows(), m + 1);
    const Index cols = std::max<Index>(ws.H.cols(), m);
    ws.H.conservativeResizeLike(DenseMatrix::Zero(rows, cols));
  }

  while (ws.j < m && !ws.happy) {
    const int col = ws.j;  // 0-based column of H being filled
    Vector w = ws.lookahead ? std::move(*ws.lookahead) : product(op, ws.V[col], col + 1, schedule, counters);
    ws.lookahead.reset();
    const double product_norm = w.norm();

    for (int i = std::max(0, col - 1); i <= col; ++i) {
      const double h = ws.V[i].dot(w);
      ws.H(i, col) = h;
      w -= h * ws.V[i];
    }
    const double s = w.norm();
    ws.j = col + 1;
    if (s <= opts.happy_tol * product_norm) {
      ws.happy = true;
      break;
    }
    ws.H(col + 1, col) = s;
    ws.V.push_back(w / s);
  }
}

double lookahead_norm(const AugmentedOperator& op, KrylovWorkspace& ws, const PrecisionSchedule& schedule,
                      MatvecCounters& counters) {
  if (ws.happy) return 0.0;
  if (!ws.lookahead) ws.lookahead = product(op, ws.V[ws.j], ws.j + 1, schedule, counters);
  return ws.lookahead->norm();
}

DenseMatrix augmented_hessenberg(const KrylovWorkspace& ws) {
  const int m = ws.j;
  if (ws.happy) return ws.H.topLeftCorner(m, m);
  DenseMatrix h = DenseMatrix::Zero(m + 2, m + 2);
  h.topLeftCorner(m + 1, m) = ws.H.topLeftCorner(m + 1, m);
  h(m + 1, m) = 1.0;
  return h;
}

LocalError krylov_error_estimate(const DenseMatrix& f, int m, double beta, double avnorm) {
  if (f.rows() < m + 2) return {0.0, std::max(m, 1)};
  const double e1 = std::fabs(beta * f(m, 0));
  const double e2 = std::fabs(beta * f(m + 1, 0) * avnorm);
  if (e1 > 10.0 * e2) return {e2, m};
  if (e1 > e2) return {(e1 * e2) / (e1 - e2), m};
  return {e1, std::max(m - 1, 1)};
}

// --- phi_combination -------------------------------------------------------

KrylovResult phi_combination(double t, const CsrMatrix& a, std::span<const Vector> b, const KrylovOptions& opts) {
  if (b.empty()) throw std::invalid_argument("phi_combination needs at least b_0");
  if (a.n_rows != a.n_cols) throw DimensionError("phi_combination needs a square matrix");
  const Index n = a.n_rows;
  for (const auto& bk : b)
    if (bk.size() != n) throw DimensionError("phi_combination: every b_k must have length N");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (opts.m_init < 1 || opts.m_max < opts.m_init) throw std::invalid_argument("need 1 <= m_init <= m_max");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("phi_combination needs finite t >= 0");
  opts.schedule.validate(opts.m_max);

  KrylovResult result;
  result.w = b[0];
  if (t == 0.0) return result;

  int p = static_cast<int>(b.size()) - 1;
  while (p > 0 && b[p].isZero(0.0)) --p;

  DenseMatrix bcols(n, p);
  double tk = 1.0;
  for (int k = 1; k <= p; ++k) {
    tk *= t;
    bcols.col(p - k) = tk * b[k];
  }
  double mu = 1.0;
  if (opts.balance && p > 0) {
    const double nrm = bcols.cwiseAbs().colwise().sum().maxCoeff();
    if (nrm > 0.0 && std::isfinite(nrm)) {
      const int ex = static_cast<int>(std::ceil(std::log2(nrm)));
      bcols *= std::ldexp(1.0, -ex);
      mu = std::ldexp(1.0, ex);
    }
  }
  const AugmentedOperator op(a.scaled(t), std::move(bcols));
  const ArnoldiOptions arnoldi{opts.happy_tol};

  Vector& w = result.w;
  Vector v(n + p);
  KrylovWorkspace ws;
  double tau = 0.0;
  double dtau = 1.0;
  int m = opts.m_init;
  double last_err = 0.0;

  while (tau < 1.0) {
    if (result.substeps >= opts.max_substeps)
      throw ConvergenceError(last_err, "phi_combination: no convergence within " + std::to_string(opts.max_substeps) +
                                           " substeps (tau=" + std::to_string(tau) + ")");
    v.head(n) = w;
    double fact = 1.0;
    for (int i = p - 1; i >= 0; --i) {
      const int k = p - 1 - i;  // slot n+i holds mu * tau^k / k!
      if (k > 0) fact *= k;
      v[n + i] = mu * std::pow(tau, k) / fact;
    }
    if (v.isZero(0.0)) {
      w.setZero();
      break;
    }
    ws.start(v);
    dtau = std::min(dtau, 1.0 - tau);

    int rejected_here = 0;
    DenseMatrix f;
    LocalError est;
    double scale = 0.0;
    for (;;) {
      iop_arnoldi(op, ws, m, opts.schedule, result.counters, arnoldi);
      if (ws.happy) {
        dtau = 1.0 - tau;
        f = dense_expm(dtau * augmented_hessenberg(ws));
        est = {0.0, std::max(ws.j, 1)};
        break;
      }
      const double avnorm = lookahead_norm(op, ws, opts.schedule, result.counters);
      f = dense_expm(dtau * augmented_hessenberg(ws));
      est = krylov_error_estimate(f, ws.j, ws.beta, avnorm);
      scale = ws.beta * f.col(0).head(ws.j).norm();
      last_err = scale > 0.0 ? est.err / (dtau * scale) : est.err;
      const bool finite = std::isfinite(est.err) && std::isfinite(scale);
      if (finite && est.err <= 1.2 * dtau * opts.tol * scale) break;

      if (m < opts.m_max) {
        m = std::min(opts.m_max, m + std::max(2, m / 4));
        continue;
      }
      double next = finite && est.err > 0.0 ? 0.9 * dtau * std::pow(dtau * opts.tol * scale / est.err, 1.0 / est.order)
                                            : dtau / 5.0;
      next = std::clamp(next, dtau / 5.0, 0.9 * dtau);
      ++result.rejections;
      if (++rejected_here > opts.max_rejections)
        throw ConvergenceError(last_err, "phi_combination: substep rejected " + std::to_string(rejected_here) +
                                             " times at basis size " + std::to_string(ws.j));
      dtau = next;
    }

    const int used = ws.j;
    Vector next_w = Vector::Zero(n);
    for (int i = 0; i < used; ++i) next_w.noalias() += (ws.beta * f(i, 0)) * ws.V[i].head(n);
    w = std::move(next_w);

    tau = (dtau >= 1.0 - tau) ? 1.0 : tau + dtau;
    ++result.substeps;
    result.final_m = used;
    result.arnoldi_steps += used;
    if (ws.lookahead) ++result.estimate_products;

    if (est.err > 0.0 && scale > 0.0) {
      const double grow = 0.9 * std::pow(dtau * opts.tol * scale / est.err, 1.0 / est.order);
      dtau *= std::clamp(grow, 0.2, 5.0);
    } else {
      dtau *= 5.0;
    }
  }

  const FloatFormat& fmt1 = opts.schedule.fmt1;
  for (const auto& [name, count] : result.counters.by_format()) {
    const FloatFormat fmt = format_by_name(name);
    if (!fmt.is_working()) result.products_below_working += count;
    if (fmt.significand_bits < fmt1.significand_bits) result.products_below_fmt1 += count;
  }
  return result;
}

}  // namespace mpexp
