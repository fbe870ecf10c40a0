#include "mpexp/experiments.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mpexp/errors.hpp"
#include "mpexp/matrix_market.hpp"

namespace mpexp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Vector default_b0(const std::string& matrix, Index n) {
  if (matrix.rfind("poisson", 0) == 0) {
    const auto k = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
    if (k * k == n) return poisson_rhs(k);
  }
  if (matrix == "bcspwr10" || matrix == "HB/bcspwr10") {
    Vector b = Vector::Zero(n);
    b[0] = 1.0;
    b[n - 1] = 1.0;
    return b;
  }
  return Vector::Ones(n);
}

CsrMatrix resolve_matrix(const std::string& matrix, const std::filesystem::path& cache_dir, const FetchOptions& fetch,
                         int poisson_sign, double poisson_scale) {
  if (matrix == "poisson") return poisson2d(99, poisson_scale, poisson_sign);
  if (matrix.rfind("poisson:", 0) == 0) return poisson2d(std::stol(matrix.substr(8)), poisson_scale, poisson_sign);
  const std::filesystem::path path(matrix);
  if (path.extension() == ".mtx") return read_matrix_market(path);
  return load_suitesparse(matrix, cache_dir, fetch);
}

PhiExperiment make_phi_experiment(const std::string& matrix, CsrMatrix a, int experiment, double t, double tol) {
  if (experiment != 1 && experiment != 2) throw std::invalid_argument("experiment must be 1 or 2");
  PhiExperiment e;
  e.matrix = matrix;
  e.experiment = experiment;
  e.t = t;
  e.tol = tol;
  const Index n = a.n_rows;
  e.a = std::move(a);
  if (experiment == 1) {
    e.b = {default_b0(matrix, n)};
  } else {
    e.b.assign(5, Vector::Ones(n));
  }
  return e;
}

Vector phi_reference(const PhiExperiment& e, const KrylovOptions& base) {
  KrylovOptions o = base;
  o.tol = std::ldexp(1.0, -52);
  o.schedule = PrecisionSchedule::working();
  return phi_combination(e.t, e.a, e.b, o).w;
}

PhiRun run_phi(const PhiExperiment& e, const Vector& ref, const PrecisionSchedule& schedule, const KrylovOptions& base,
               const std::string& arm) {
  PhiRun row;
  row.arm = arm;
  row.schedule = schedule;
  KrylovOptions o = base;
  o.tol = e.tol;
  o.schedule = schedule;
  try {
    row.result = phi_combination(e.t, e.a, e.b, o);
    row.err = rel_linf_error(row.result.w, ref);
    row.status = std::isfinite(row.err) ? "ok" : "overflow";
    if (!std::isfinite(row.err)) row.err = kInf;
  } catch (const OverflowError& ex) {
    row.status = "overflow";
    row.message = ex.what();
    row.err = kInf;
  } catch (const ConvergenceError& ex) {
    row.status = "no-convergence";
    row.message = ex.what();
    row.err = kInf;
  } catch (const std::exception& ex) {
    row.status = "error";
    row.message = ex.what();
    row.err = kInf;
  }
  return row;
}

double fraction_below_double(const KrylovResult& r) {
  const auto total = r.counters.total();
  return total == 0 ? 0.0 : static_cast<double>(r.products_below_working) / static_cast<double>(total);
}

double fraction_below_single(const KrylovResult& r) {
  std::int64_t below = 0;
  for (const auto& [name, count] : r.counters.by_format())
    if (format_by_name(name).significand_bits < formats::fp32().significand_bits) below += count;
  const auto total = r.counters.total();
  return total == 0 ? 0.0 : static_cast<double>(below) / static_cast<double>(total);
}

namespace {

// Smallest value in [lo, hi] whose trial meets the target, probing lo, lo+grid,
// ... then refining the last grid interval. hi is always probed last.
template <typename Trial>
int grid_search(int lo, int hi, int grid, Trial&& trial) {
  int prev = lo - 1;
  int hit = -1;
  for (int m = lo;; m += grid) {
    if (m > hi) m = hi;
    if (trial(m)) {
      hit = m;
      break;
    }
    if (m == hi) return -1;
    prev = m;
  }
  for (int m = prev + 1; m < hit; ++m)
    if (trial(m)) return m;
  return hit;
}

}  // namespace

SweepResult sweep_chop(const PhiExperiment& e, const Vector& ref, const SweepOptions& opts, const KrylovOptions& base) {
  if (opts.grid < 1) throw std::invalid_argument("sweep grid must be at least 1");
  if (opts.fmt2.empty()) throw std::invalid_argument("sweep needs at least one fmt2");
  const int m_max = base.m_max;
  SweepResult out;

  SweepTrial dbl;
  dbl.phase = "double";
  dbl.run = run_phi(e, ref, PrecisionSchedule::working(), base, "double");
  if (!dbl.run.ok()) throw Error("double-precision run failed: " + dbl.run.message);
  out.err_double = dbl.run.err;
  out.target = std::max(out.err_double, e.tol);
  dbl.meets = true;
  out.trials.push_back(dbl);

  auto record = [&](const std::string& phase, const std::string& fmt2, const PrecisionSchedule& s) -> const SweepTrial& {
    SweepTrial t;
    t.phase = phase;
    t.fmt2 = fmt2;
    t.mchop1 = s.mchop1;
    t.mchop2 = s.mchop2;
    t.run = run_phi(e, ref, s, base, phase);
    t.meets = t.run.ok() && t.run.err <= out.target;
    out.trials.push_back(std::move(t));
    return out.trials.back();
  };

  const int m1 = grid_search(0, m_max, opts.grid, [&](int m) {
    return record("mchop1", "", PrecisionSchedule::mixed(m, kNever, opts.fmt1, opts.fmt1, opts.mode)).meets;
  });

  for (const auto& fmt2 : opts.fmt2) {
    SweepChoice c;
    c.fmt2 = fmt2.name;
    if (m1 >= 0) {
      const int m2 = grid_search(m1, m_max, opts.grid, [&](int m) {
        return record("mchop2", fmt2.name, PrecisionSchedule::mixed(m1, m, fmt2, opts.fmt1, opts.mode)).meets;
      });
      if (m2 >= 0) {
        for (auto it = out.trials.rbegin(); it != out.trials.rend(); ++it) {
          if (it->phase == "mchop2" && it->fmt2 == fmt2.name && it->mchop2 == m2 && it->meets) {
            c.found = true;
            c.mchop1 = m1;
            c.mchop2 = m2;
            c.err = it->run.err;
            c.final_m = it->run.result.final_m;
            c.frac_below_double = fraction_below_double(it->run.result);
            c.frac_below_single = fraction_below_single(it->run.result);
            break;
          }
        }
      }
    }
    out.choices.push_back(c);
  }
  return out;
}

// --- time integration studies ---------------------------------------------

ErrorMetric metric_by_name(const std::string& name) {
  if (name == "l2") return ErrorMetric::abs_l2;
  if (name == "linf") return ErrorMetric::rel_linf;
  throw std::invalid_argument("unknown metric '" + name + "' (expected l2 or linf)");
}

const char* to_string(ErrorMetric m) { return m == ErrorMetric::abs_l2 ? "l2" : "linf"; }

ArmResult run_arm(const StudyOptions& s, const Vector& ref, const ArmSpec& arm, int steps) {
  ArmResult r;
  IntegratorConfig cfg;
  cfg.method = arm.method;
  cfg.steps = steps;
  cfg.t0 = s.t0;
  cfg.tf = s.tf;
  cfg.krylov_tol = s.krylov_tol;
  cfg.schedule = arm.schedule;
  cfg.jacobian_format = arm.jacobian_format;
  cfg.gamma_mode = arm.gamma;
  cfg.m_max = s.m_max;
  const auto start = std::chrono::steady_clock::now();
  try {
    IntegrationResult res = integrate(adr_system(s.problem), adr_initial(s.problem), cfg);
    r.err = s.metric == ErrorMetric::abs_l2 ? abs_l2_error(res.u, ref) : rel_linf_error(res.u, ref);
    r.counters = res.stats.counters;
    r.mv_effective = effective_matvecs(r.counters, s.a, s.b);
    if (!std::isfinite(r.err)) {
      r.status = "overflow";
      r.err = kInf;
    }
  } catch (const std::exception& ex) {
    const auto* step = dynamic_cast<const StepFailure*>(&ex);
    r.status = step && step->overflow() ? "overflow" : "error";
    r.message = ex.what();
    r.err = kInf;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<int> log_steps(int min_steps, int max_steps) {
  if (min_steps < 1 || max_steps < min_steps) throw std::invalid_argument("need 1 <= min_steps <= max_steps");
  std::vector<int> out;
  for (long decade = 1; decade <= max_steps; decade *= 10)
    for (int f : {1, 2, 5}) {
      const long s = f * decade;
      if (s >= min_steps && s <= max_steps) out.push_back(static_cast<int>(s));
    }
  return out;
}

double loglog_slope(const std::vector<int>& steps, const std::vector<double>& errs) {
  if (steps.size() != errs.size()) throw std::invalid_argument("loglog_slope: length mismatch");
  const auto n = static_cast<double>(steps.size());
  if (steps.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double x = std::log(static_cast<double>(steps[i])), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mpexp
