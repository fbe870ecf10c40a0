#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mpexp/errors.hpp"
#include "mpexp/phikrylov.hpp"

namespace mpexp {

/// u' = f(u) with an explicit Jacobian.
struct OdeSystem {
  Index n = 0;
  std::function<Vector(const Vector&)> rhs;
  std::function<CsrMatrix(const Vector&)> jacobian;
  /// Optional upper bound on the logarithmic 2-norm of J(u). When unset the
  /// Gershgorin bound of the rounded Jacobian is used.
  std::function<double(const Vector&)> mu2_bound;
};

enum class Method { ere, rere };
enum class GammaMode { one, zero, estimate, optimal };

Method method_by_name(const std::string& name);
GammaMode gamma_mode_by_name(const std::string& name);
const char* to_string(Method m);
const char* to_string(GammaMode g);

struct IntegratorConfig {
  Method method = Method::rere;
  int steps = 100;
  double t0 = 0.0;
  double tf = 1.0;
  double krylov_tol = 1e-12;
  PrecisionSchedule schedule = PrecisionSchedule::working();
  FloatFormat jacobian_format = formats::fp64();
  GammaMode gamma_mode = GammaMode::optimal;
  int m_init = 10;
  int m_max = 128;
  KrylovOptions krylov() const;
  void validate() const;
};

/// Work done by one step.
struct StepStats {
  double gamma = 0.0;
  MatvecCounters counters;
  int substeps = 0;
  int rejections = 0;

  void absorb(const KrylovResult& r);
};

struct RunStats {
  std::vector<double> gammas;
  MatvecCounters counters;
  std::int64_t substeps = 0;
  std::int64_t rejections = 0;
  double wall_seconds = 0.0;
};

struct IntegrationResult {
  Vector u;
  RunStats stats;
};

/// A step failed; carries the 0-based step index.
class StepFailure : public Error {
 public:
  StepFailure(int step, const std::string& what, bool overflow = false)
      : Error(what), step_(step), overflow_(overflow) {}
  int step() const { return step_; }
  /// The underlying failure was an OverflowError.
  bool overflow() const { return overflow_; }

 private:
  int step_;
  bool overflow_;
};

/// u + h phi_1(h J) f given f = f(u) and the (already rounded) Jacobian.
Vector ere_update(const Vector& u, double h, const Vector& f, const CsrMatrix& jt, const KrylovOptions& opts,
                  StepStats* stats = nullptr);

/// u + h gamma f + h (1 - gamma) phi_1(h J) f + h^2 gamma phi_2(h J) J f.
///
/// J f is formed in `jf_format` (the Jacobian's format) and counted. gamma = 0
/// skips it and reproduces ere_update bit for bit.
Vector rere_update(const Vector& u, double h, double gamma, const Vector& f, const CsrMatrix& jt,
                   const KrylovOptions& opts, const FloatFormat& jf_format, StepStats* stats = nullptr);

Vector ere_step(const Vector& u, double h, const OdeSystem& sys, const IntegratorConfig& cfg,
                StepStats* stats = nullptr);
Vector rere_step(const Vector& u, double h, double gamma, const OdeSystem& sys, const IntegratorConfig& cfg,
                 StepStats* stats = nullptr);

/// f^T phi1_f / |f|^2; 1 when f is zero.
double gamma_optimal(const Vector& f_val, const Vector& phi1_f);

/// phi_1(h * mu2).
double gamma_estimate(double h, double mu2);

/// phi_1(z), accurate near zero.
double phi1(double z);

/// Gershgorin bound on the largest eigenvalue of (J + J^T) / 2.
double mu2_upper_bound(const CsrMatrix& j);

/// Fixed-step integration from cfg.t0 to cfg.tf.
IntegrationResult integrate(const OdeSystem& sys, const Vector& u0, const IntegratorConfig& cfg);

/// mv_double + mv_single / a + mv_half / b. Formats are classed by storage
/// width: tf32 counts as single, bfloat16 as half.
double effective_matvecs(const MatvecCounters& c, double a = 2.0, double b = 4.0);

/// |u - ref|_inf / |ref|_inf. Throws std::invalid_argument on a zero reference.
double rel_linf_error(const Vector& u, const Vector& ref);
/// |u - ref|_2.
double abs_l2_error(const Vector& u, const Vector& ref);

}  // namespace mpexp
