#include "mpexp/integrators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mpexp {

Method method_by_name(const std::string& name) {
  if (name == "ere" || name == "ERE") return Method::ere;
  if (name == "rere" || name == "RERE") return Method::rere;
  throw std::invalid_argument("unknown method '" + name + "' (expected ere or rere)");
}

GammaMode gamma_mode_by_name(const std::string& name) {
  if (name == "one") return GammaMode::one;
  if (name == "zero") return GammaMode::zero;
  if (name == "estimate") return GammaMode::estimate;
  if (name == "optimal") return GammaMode::optimal;
  throw std::invalid_argument("unknown gamma mode '" + name + "' (expected one, zero, estimate or optimal)");
}

const char* to_string(Method m) { return m == Method::ere ? "ere" : "rere"; }

const char* to_string(GammaMode g) {
  switch (g) {
    case GammaMode::one: return "one";
    case GammaMode::zero: return "zero";
    case GammaMode::estimate: return "estimate";
    case GammaMode::optimal: return "optimal";
  }
  return "?";
}

KrylovOptions IntegratorConfig::krylov() const {
  KrylovOptions o;
  o.tol = krylov_tol;
  o.m_init = std::min(m_init, m_max);
  o.m_max = m_max;
  o.schedule = schedule;
  return o;
}

void IntegratorConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (!(tf > t0)) throw std::invalid_argument("tf must exceed t0");
  if (!(krylov_tol > 0.0)) throw std::invalid_argument("Krylov tolerance must be positive");
  schedule.validate(m_max);
}

void StepStats::absorb(const KrylovResult& r) {
  counters += r.counters;
  substeps += r.substeps;
  rejections += r.rejections;
}

Vector ere_update(const Vector& u, double h, const Vector& f, const CsrMatrix& jt, const KrylovOptions& opts,
                  StepStats* stats) {
  const Vector zero = Vector::Zero(u.size());
  const std::vector<Vector> b{zero, f};
  KrylovResult r = phi_combination(h, jt, b, opts);
  if (stats) stats->absorb(r);
  return u + r.w;
}

Vector rere_update(const Vector& u, double h, double gamma, const Vector& f, const CsrMatrix& jt,
                   const KrylovOptions& opts, const FloatFormat& jf_format, StepStats* stats) {
  if (!std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite");
  std::vector<Vector> b{Vector::Zero(u.size()), (1.0 - gamma) * f};
  if (gamma != 0.0) {
    MatvecCounters local;
    ChoppedProduct jf = matvec_chopped(jt, f, jf_format, opts.schedule.mode, &local);
    if (stats) stats->counters += local;
    if (jf.overflow) throw OverflowError(jf_format.name, "non-finite J f product in " + jf_format.name);
    b.push_back(gamma * jf.y);
  }
  KrylovResult r = phi_combination(h, jt, b, opts);
  if (stats) stats->absorb(r);
  return (u + (h * gamma) * f) + r.w;
}

Vector ere_step(const Vector& u, double h, const OdeSystem& sys, const IntegratorConfig& cfg, StepStats* stats) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  const CsrMatrix jt = sys.jacobian(u).rounded(cfg.jacobian_format);
  return ere_update(u, h, sys.rhs(u), jt, cfg.krylov(), stats);
}

Vector rere_step(const Vector& u, double h, double gamma, const OdeSystem& sys, const IntegratorConfig& cfg,
                 StepStats* stats) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  const CsrMatrix jt = sys.jacobian(u).rounded(cfg.jacobian_format);
  if (stats) stats->gamma = gamma;
  return rere_update(u, h, gamma, sys.rhs(u), jt, cfg.krylov(), cfg.jacobian_format, stats);
}

double gamma_optimal(const Vector& f_val, const Vector& phi1_f) {
  if (f_val.size() != phi1_f.size()) throw DimensionError("gamma_optimal: length mismatch");
  const double ff = f_val.squaredNorm();
  if (ff == 0.0) return 1.0;
  return f_val.dot(phi1_f) / ff;
}

double phi1(double z) {
  if (z < -745.0) return -1.0 / z;
  if (std::fabs(z) < 1e-2) {
    // 1 + z/2 + z^2/6 + ... ; seven terms reach binary64 accuracy for |z| < 1e-2.
    double term = 1.0, sum = 1.0;
    for (int k = 2; k <= 8; ++k) {
      term *= z / k;
      sum += term;
    }
    return sum;
  }
  return std::expm1(z) / z;
}

double gamma_estimate(double h, double mu2) {
  if (!std::isfinite(mu2)) throw std::invalid_argument("mu2 must be finite");
  const double z = h * mu2;
  if (z < -745.0) return 0.0;
  return phi1(z);
}

double mu2_upper_bound(const CsrMatrix& j) {
  if (j.n_rows != j.n_cols) throw DimensionError("mu2_upper_bound needs a square matrix");
  const CsrMatrix jt = j.transposed();
  double best = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < j.n_rows; ++i) {
    // Merge row i of J and of J^T (both sorted by column).
    double diag = 0.0, off = 0.0;
    Index a = j.row_ptr[i], ae = j.row_ptr[i + 1];
    Index b = jt.row_ptr[i], be = jt.row_ptr[i + 1];
    while (a < ae || b < be) {
      const Index ca = a < ae ? j.col_idx[a] : j.n_cols;
      const Index cb = b < be ? jt.col_idx[b] : j.n_cols;
      const Index c = std::min(ca, cb);
      double s = 0.0;
      if (ca == c) s += j.values[a++];
      if (cb == c) s += jt.values[b++];
      s *= 0.5;
      if (c == i)
        diag = s;
      else
        off += std::fabs(s);
    }
    best = std::max(best, diag + off);
  }
  return j.n_rows == 0 ? 0.0 : best;
}

IntegrationResult integrate(const OdeSystem& sys, const Vector& u0, const IntegratorConfig& cfg) {
  cfg.validate();
  if (u0.size() != sys.n) throw DimensionError("integrate: initial state has wrong length");
  const auto start = std::chrono::steady_clock::now();
  const double h = (cfg.tf - cfg.t0) / cfg.steps;
  const KrylovOptions kopts = cfg.krylov();

  IntegrationResult out;
  out.u = u0;
  out.stats.gammas.reserve(cfg.steps);
  for (int n = 0; n < cfg.steps; ++n) {
    try {
      StepStats st;
      const Vector f = sys.rhs(out.u);
      const CsrMatrix jt = sys.jacobian(out.u).rounded(cfg.jacobian_format);
      if (cfg.method == Method::ere) {
        st.gamma = 0.0;
        out.u = ere_update(out.u, h, f, jt, kopts, &st);
      } else {
        double gamma = 1.0;
        switch (cfg.gamma_mode) {
          case GammaMode::one: gamma = 1.0; break;
          case GammaMode::zero: gamma = 0.0; break;
          case GammaMode::estimate:
            gamma = gamma_estimate(h, sys.mu2_bound ? sys.mu2_bound(out.u) : mu2_upper_bound(jt));
            break;
          case GammaMode::optimal: {
            if (f.squaredNorm() == 0.0) break;
            const std::vector<Vector> b{Vector::Zero(f.size()), f};
            KrylovResult r = phi_combination(h, jt, b, kopts);
            st.absorb(r);
            gamma = gamma_optimal(f, r.w / h);
            break;
          }
        }
        st.gamma = gamma;
        out.u = rere_update(out.u, h, gamma, f, jt, kopts, cfg.jacobian_format, &st);
      }
      out.stats.gammas.push_back(st.gamma);
      out.stats.counters += st.counters;
      out.stats.substeps += st.substeps;
      out.stats.rejections += st.rejections;
    } catch (const OverflowError& e) {
      throw StepFailure(n, "step " + std::to_string(n) + ": " + e.what(), true);
    } catch (const std::exception& e) {
      throw StepFailure(n, "step " + std::to_string(n) + ": " + e.what());
    }
  }
  out.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double effective_matvecs(const MatvecCounters& c, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("effective_matvecs: a and b must be positive");
  double total = 0.0;
  for (const auto& [name, count] : c.by_format()) {
    const int bytes = format_by_name(name).storage_bytes();
    const double n = static_cast<double>(count);
    total += bytes >= 8 ? n : bytes >= 4 ? n / a : n / b;
  }
  return total;
}

double rel_linf_error(const Vector& u, const Vector& ref) {
  if (u.size() != ref.size()) throw DimensionError("rel_linf_error: length mismatch");
  const double r = ref.lpNorm<Eigen::Infinity>();
  if (r == 0.0) throw std::invalid_argument("rel_linf_error: zero reference");
  return (u - ref).lpNorm<Eigen::Infinity>() / r;
}

double abs_l2_error(const Vector& u, const Vector& ref) {
  if (u.size() != ref.size()) throw DimensionError("abs_l2_error: length mismatch");
  return (u - ref).norm();
}

}  // namespace mpexp
