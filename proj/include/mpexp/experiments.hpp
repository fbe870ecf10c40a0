#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mpexp/adr.hpp"
#include "mpexp/phikrylov.hpp"
#include "mpexp/suitesparse.hpp"

namespace mpexp {

/// u = sum_k t^k phi_k(t A) b_k with its run parameters.
struct PhiExperiment {
  std::string matrix;
  int experiment = 1;  // 1: p = 0, 2: p = 4 with all-ones b_k
  CsrMatrix a;
  std::vector<Vector> b;
  double t = 1.0;
  double tol = 1e-12;
};

/// orani678: ones; bcspwr10: e_1 + e_N; poisson: the grid right-hand side; otherwise ones.
Vector default_b0(const std::string& matrix, Index n);

/// "poisson", "poisson:K", a path to a .mtx file, or a collection name.
CsrMatrix resolve_matrix(const std::string& matrix, const std::filesystem::path& cache_dir,
                         const FetchOptions& fetch = {}, int poisson_sign = -1, double poisson_scale = 2500.0);

PhiExperiment make_phi_experiment(const std::string& matrix, CsrMatrix a, int experiment, double t, double tol);

struct PhiRun {
  std::string arm;
  PrecisionSchedule schedule;
  std::string status;  // ok, overflow, no-convergence, error
  std::string message;
  double err = 0.0;    // |u - ref|_inf / |ref|_inf; inf when the run failed
  KrylovResult result;

  bool ok() const { return status == "ok"; }
};

/// Working precision solve at tol = 2^-52.
Vector phi_reference(const PhiExperiment& e, const KrylovOptions& base = {});

/// One row; failures are captured in status instead of thrown.
PhiRun run_phi(const PhiExperiment& e, const Vector& ref, const PrecisionSchedule& schedule,
               const KrylovOptions& base = {}, const std::string& arm = "");

struct SweepOptions {
  FloatFormat fmt1 = formats::fp32();
  std::vector<FloatFormat> fmt2 = {formats::tf32(), formats::fp16(), formats::bf16()};
  int grid = 5;
  ChopMode mode = ChopMode::op_level;
};

struct SweepTrial {
  std::string phase;  // double, mchop1, mchop2
  std::string fmt2;
  int mchop1 = kNever;
  int mchop2 = kNever;
  PhiRun run;
  bool meets = false;
};

struct SweepChoice {
  std::string fmt2;
  bool found = false;
  int mchop1 = kNever;
  int mchop2 = kNever;
  double err = 0.0;
  int final_m = 0;
  double frac_below_double = 0.0;
  double frac_below_single = 0.0;
};

struct SweepResult {
  double err_double = 0.0;
  double target = 0.0;
  std::vector<SweepTrial> trials;
  std::vector<SweepChoice> choices;
};

/// Two-phase threshold search: the smallest mchop1 (double -> fmt1, mchop2 =
/// inf) meeting max(err_double, tol), then for each fmt2 the smallest mchop2 >=
/// mchop1 meeting it. Each phase walks a grid of `grid` and refines with step 1.
SweepResult sweep_chop(const PhiExperiment& e, const Vector& ref, const SweepOptions& opts,
                       const KrylovOptions& base = {});

/// frac of products below working precision / below fmt1.
double fraction_below_double(const KrylovResult& r);
double fraction_below_single(const KrylovResult& r);

// --- time integration studies ---------------------------------------------

struct ArmSpec {
  std::string name;
  Method method = Method::ere;
  FloatFormat jacobian_format = formats::fp64();
  PrecisionSchedule schedule = PrecisionSchedule::working();
  GammaMode gamma = GammaMode::optimal;
};

struct ArmResult {
  std::string status = "ok";
  std::string message;
  double err = 0.0;
  MatvecCounters counters;
  double mv_effective = 0.0;
  double seconds = 0.0;
};

enum class ErrorMetric { abs_l2, rel_linf };

ErrorMetric metric_by_name(const std::string& name);
const char* to_string(ErrorMetric m);

struct StudyOptions {
  AdrProblem problem;
  double t0 = 0.0;
  double tf = 0.3;
  double krylov_tol = 1e-12;
  int m_max = 128;
  ErrorMetric metric = ErrorMetric::abs_l2;
  double a = 2.0;
  double b = 4.0;
};

ArmResult run_arm(const StudyOptions& s, const Vector& ref, const ArmSpec& arm, int steps);

/// 10, 20, 50, 100, ... up to and including `max_steps` when it is on the 1-2-5 ladder.
std::vector<int> log_steps(int min_steps, int max_steps);

/// Least-squares slope of log(err) against log(steps); NaN with fewer than two points.
double loglog_slope(const std::vector<int>& steps, const std::vector<double>& errs);

}  // namespace mpexp
