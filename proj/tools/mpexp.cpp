// mpexp: experiment harness for the mixed-precision phi-function solver and
// exponential Rosenbrock-Euler integrators. Every subcommand writes CSV with
// '#' metadata lines.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpexp/errors.hpp"
#include "mpexp/experiments.hpp"

namespace {

using namespace mpexp;

constexpr const char* kVersion = "0.1.0";

struct Settings {
  std::vector<std::string> matrix = {"poisson"};
  std::string t = "auto";
  std::string tol = "auto";
  std::vector<std::string> format = {"auto"};
  int mchop1 = -1;
  int mchop2 = -1;
  std::string mode = "op";
  std::string steps = "auto";
  std::string gamma = "optimal";
  std::string bc = "neumann";
  int nx = 21;
  std::string out;
  std::uint64_t seed = 0;
  std::string cache_dir;
  // exp1/exp2 only
  int sign = -1;
  double scale = 2500.0;
  int m_max = 128;
  // sweep-chop only
  int experiment = 1;
  int grid = 5;
  // convergence/work only
  std::string metric = "auto";
  int ref_steps = 100000;
  std::vector<std::string> names;  // fetch
};

std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string fmt_threshold(int m) { return m == kNever ? "inf" : std::to_string(m); }

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<FloatFormat> parse_formats(const std::vector<std::string>& s, const std::string& fallback) {
  const bool use_default = s.empty() || (s.size() == 1 && s.front() == "auto");
  std::vector<FloatFormat> out;
  for (const auto& name : use_default ? split(fallback) : s) out.push_back(format_by_name(name));
  if (out.empty()) throw std::invalid_argument("--format list is empty");
  return out;
}

std::vector<int> parse_steps(const std::string& s, const std::string& fallback) {
  const std::string spec = s == "auto" ? fallback : s;
  const auto colon = spec.find(':');
  if (colon != std::string::npos) return log_steps(std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1)));
  std::vector<int> out;
  for (const auto& item : split(spec)) {
    const int v = std::stoi(item);
    if (v < 1) throw std::invalid_argument("--steps entries must be positive");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--steps is empty");
  return out;
}

std::filesystem::path cache_dir(const Settings& s) {
  return s.cache_dir.empty() ? default_cache_dir() : std::filesystem::path(s.cache_dir);
}

std::string bare_name(const std::string& matrix) {
  const auto slash = matrix.rfind('/');
  return slash == std::string::npos ? matrix : matrix.substr(slash + 1);
}

double default_t(const std::string& matrix) { return matrix.rfind("poisson", 0) == 0 ? 1.0 : 10.0; }

double default_tol(const std::string& matrix) {
  const std::string n = bare_name(matrix);
  if (n == "orani678") return std::sqrt(std::ldexp(1.0, -52));
  if (n == "bcspwr10") return 1e-5;
  return 1e-12;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

  void meta(const std::string& line) { os() << "# " << line << '\n'; }
  void header(const std::vector<std::string>& cols) { row(cols); }
  void row(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) os() << (i ? "," : "") << cols[i];
    os() << '\n';
    os().flush();
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_metadata(Output& out, const CLI::App& app, const std::string& command) {
  out.meta(std::string("mpexp ") + kVersion + " " + command);
  std::istringstream cfg(app.config_to_str(true, false));
  for (std::string line; std::getline(cfg, line);)
    if (!line.empty() && line[0] != '[') out.meta(line);
}

// --- exp1 / exp2 -----------------------------------------------------------

const std::vector<std::string> kCounterFormats = {"double", "single", "tf32", "half", "bfloat16"};

int cmd_exp(const Settings& s, int experiment, const CLI::App& app) {
  Output out(s.out);
  write_metadata(out, app, "exp" + std::to_string(experiment));
  const ChopMode mode = chop_mode_by_name(s.mode);
  const auto fmts = parse_formats(s.format, "single,tf32,half,bfloat16");

  std::vector<std::string> cols = {"matrix", "experiment", "arm", "format", "mchop1", "mchop2", "mode", "tol",
                                   "err", "final_m", "substeps", "rejections"};
  for (const auto& f : kCounterFormats) cols.push_back("mv_" + f);
  cols.push_back("status");
  out.header(cols);

  int failed = 0;
  for (const auto& matrix : s.matrix) {
    const double t = s.t == "auto" ? default_t(matrix) : std::stod(s.t);
    const double tol = s.tol == "auto" ? default_tol(matrix) : std::stod(s.tol);
    auto fail_row = [&](const std::string& status, const std::string& msg) {
      std::vector<std::string> r = {matrix, std::to_string(experiment), "-", "-", "-", "-", s.mode, fmt_num(tol),
                                    "inf", "0", "0", "0"};
      for (std::size_t i = 0; i < kCounterFormats.size(); ++i) r.push_back("0");
      r.push_back(status);
      out.row(r);
      out.meta(matrix + ": " + msg);
      ++failed;
    };

    PhiExperiment e;
    Vector ref;
    try {
      e = make_phi_experiment(bare_name(matrix), resolve_matrix(matrix, cache_dir(s), {}, s.sign, s.scale), experiment,
                              t, tol);
      KrylovOptions base;
      base.m_max = s.m_max;
      ref = phi_reference(e, base);
    } catch (const FetchError& ex) {
      fail_row("fetch-error", ex.what());
      continue;
    } catch (const ParseError& ex) {
      fail_row("parse-error", ex.what());
      continue;
    } catch (const std::exception& ex) {
      fail_row("reference-error", ex.what());
      continue;
    }

    struct Arm {
      std::string arm, format;
      PrecisionSchedule schedule;
    };
    std::vector<Arm> arms = {{"double", "double", PrecisionSchedule::working()}};
    for (const auto& f : fmts) arms.push_back({"naive", f.name, PrecisionSchedule::uniform(f, mode)});
    if (s.mchop1 >= 0 || s.mchop2 >= 0) {
      const int m1 = s.mchop1 >= 0 ? s.mchop1 : 0;
      const int m2 = s.mchop2 >= 0 ? s.mchop2 : kNever;
      for (const auto& f : fmts) arms.push_back({"mixed", f.name, PrecisionSchedule::mixed(m1, m2, f, formats::fp32(), mode)});
    }

    KrylovOptions base;
    base.m_max = s.m_max;
    for (const auto& a : arms) {
      const PhiRun r = run_phi(e, ref, a.schedule, base, a.arm);
      std::vector<std::string> row = {matrix,
                                      std::to_string(experiment),
                                      a.arm,
                                      a.format,
                                      fmt_threshold(a.schedule.mchop1),
                                      fmt_threshold(a.schedule.mchop2),
                                      to_string(a.schedule.mode),
                                      fmt_num(tol),
                                      fmt_num(r.err),
                                      std::to_string(r.result.final_m),
                                      std::to_string(r.result.substeps),
                                      std::to_string(r.result.rejections)};
      for (const auto& f : kCounterFormats) row.push_back(std::to_string(r.result.counters.count(f)));
      row.push_back(r.status);
      out.row(row);
      if (!r.ok()) {
        out.meta(matrix + " " + a.arm + " " + a.format + ": " + r.message);
        ++failed;
      }
    }
  }
  return failed ? 1 : 0;
}

// --- sweep-chop ------------------------------------------------------------

int cmd_sweep(const Settings& s, const CLI::App& app) {
  Output out(s.out);
  write_metadata(out, app, "sweep-chop");
  SweepOptions so;
  so.fmt2 = parse_formats(s.format, "tf32,half,bfloat16");
  so.grid = s.grid;
  so.mode = chop_mode_by_name(s.mode);
  out.header({"matrix", "experiment", "kind", "phase", "fmt2", "mchop1", "mchop2", "err", "target", "meets", "final_m",
              "frac_below_double", "frac_below_single", "status"});

  int failed = 0;
  for (const auto& matrix : s.matrix) {
    const double t = s.t == "auto" ? default_t(matrix) : std::stod(s.t);
    const double tol = s.tol == "auto" ? default_tol(matrix) : std::stod(s.tol);
    const std::string exp = std::to_string(s.experiment);
    try {
      KrylovOptions base;
      base.m_max = s.m_max;
      const PhiExperiment e = make_phi_experiment(
          bare_name(matrix), resolve_matrix(matrix, cache_dir(s), {}, s.sign, s.scale), s.experiment, t, tol);
      const Vector ref = phi_reference(e, base);
      const SweepResult r = sweep_chop(e, ref, so, base);
      for (const auto& tr : r.trials)
        out.row({matrix, exp, "trial", tr.phase, tr.fmt2.empty() ? "-" : tr.fmt2, fmt_threshold(tr.mchop1),
                 fmt_threshold(tr.mchop2), fmt_num(tr.run.err), fmt_num(r.target), tr.meets ? "1" : "0",
                 std::to_string(tr.run.result.final_m), fmt_num(fraction_below_double(tr.run.result)),
                 fmt_num(fraction_below_single(tr.run.result)), tr.run.status});
      for (const auto& c : r.choices) {
        out.row({matrix, exp, "choice", "-", c.fmt2, fmt_threshold(c.mchop1), fmt_threshold(c.mchop2),
                 fmt_num(c.found ? c.err : INFINITY), fmt_num(r.target), c.found ? "1" : "0", std::to_string(c.final_m),
                 fmt_num(c.frac_below_double), fmt_num(c.frac_below_single), c.found ? "ok" : "exhausted"});
        if (!c.found) ++failed;
      }
    } catch (const std::exception& ex) {
      out.row({matrix, exp, "choice", "-", "-", "-", "-", "inf", "-", "0", "0", "0", "0", "error"});
      out.meta(matrix + ": " + ex.what());
      ++failed;
    }
  }
  return failed ? 1 : 0;
}

// --- convergence / work ----------------------------------------------------

struct Study {
  StudyOptions opts;
  Vector ref;
};

Study make_study(const Settings& s, ErrorMetric metric) {
  Study st;
  st.opts.problem.nx = s.nx;
  st.opts.problem.bc = boundary_by_name(s.bc);
  st.opts.tf = s.t == "auto" ? 0.3 : std::stod(s.t);
  st.opts.krylov_tol = s.tol == "auto" ? 1e-12 : std::stod(s.tol);
  st.opts.m_max = s.m_max;
  st.opts.metric = metric;
  ReferenceOptions ro;
  ro.steps = s.ref_steps;
  ro.cache_dir = cache_dir(s) / "reference";
  st.ref = reference_solution(st.opts.problem, st.opts.t0, st.opts.tf, ro);
  return st;
}

int run_study(const Settings& s, const CLI::App& app, const std::string& command, const std::vector<ArmSpec>& arms,
              const Study& st, const std::vector<int>& steps, bool with_work) {
  Output out(s.out);
  write_metadata(out, app, command);
  if (with_work) out.meta("effective matvecs: a=" + fmt_num(st.opts.a) + " b=" + fmt_num(st.opts.b));
  out.meta(std::string("metric=") + to_string(st.opts.metric) + " problem=" + st.opts.problem.describe());

  std::vector<std::string> cols = {"steps"};
  for (const auto& a : arms) {
    if (with_work) {
      cols.push_back(a.name + "_err");
      cols.push_back(a.name + "_mv");
    } else {
      cols.push_back(a.name + "_error");
    }
  }
  out.header(cols);

  int failed = 0;
  for (int n : steps) {
    std::vector<std::string> row = {std::to_string(n)};
    for (const auto& a : arms) {
      const ArmResult r = run_arm(st.opts, st.ref, a, n);
      row.push_back(fmt_num(r.err));
      if (with_work) row.push_back(fmt_num(r.status == "ok" ? r.mv_effective : INFINITY));
      if (r.status != "ok") {
        out.meta("steps=" + std::to_string(n) + " " + a.name + ": " + r.status + ": " + r.message);
        ++failed;
      }
    }
    out.row(row);
  }
  return failed ? 1 : 0;
}

int cmd_convergence(const Settings& s, const CLI::App& app) {
  const ErrorMetric metric = metric_by_name(s.metric == "auto" ? "l2" : s.metric);
  const FloatFormat low = parse_formats(s.format, "single").front();
  const ChopMode mode = chop_mode_by_name(s.mode);
  const GammaMode gamma = gamma_mode_by_name(s.gamma);
  const PrecisionSchedule mixed =
      PrecisionSchedule::mixed(s.mchop1 >= 0 ? s.mchop1 : 3, s.mchop2 >= 0 ? s.mchop2 : 6, low, formats::fp32(), mode);
  const std::vector<ArmSpec> arms = {
      {"ere_dbl", Method::ere, formats::fp64(), PrecisionSchedule::working(), gamma},
      {"ere_low", Method::ere, low, PrecisionSchedule::uniform(low, mode), gamma},
      {"rere_low", Method::rere, low, PrecisionSchedule::uniform(low, mode), gamma},
      {"rere_mixed", Method::rere, formats::fp64(), mixed, gamma},
  };
  const auto steps = parse_steps(s.steps, "10:10000");
  return run_study(s, app, "convergence", arms, make_study(s, metric), steps, false);
}

int cmd_work(const Settings& s, const CLI::App& app) {
  const ErrorMetric metric = metric_by_name(s.metric == "auto" ? "linf" : s.metric);
  const FloatFormat low = parse_formats(s.format, "half").front();
  const ChopMode mode = chop_mode_by_name(s.mode);
  const GammaMode gamma = gamma_mode_by_name(s.gamma);
  const PrecisionSchedule mixed =
      PrecisionSchedule::mixed(s.mchop1 >= 0 ? s.mchop1 : 3, s.mchop2 >= 0 ? s.mchop2 : 6, low, formats::fp32(), mode);
  const std::vector<ArmSpec> arms = {
      {"ere_dbl", Method::ere, formats::fp64(), PrecisionSchedule::working(), gamma},
      {"ere_mixed", Method::ere, formats::fp64(), mixed, gamma},
      {"rere_dbl", Method::rere, formats::fp64(), PrecisionSchedule::working(), gamma},
      {"rere_mixed", Method::rere, formats::fp64(), mixed, gamma},
  };
  const auto steps = parse_steps(s.steps, "10:1000");
  return run_study(s, app, "work", arms, make_study(s, metric), steps, true);
}

// --- fetch -----------------------------------------------------------------

int cmd_fetch(const Settings& s) {
  std::vector<std::string> names = s.names;
  if (names.empty()) names = s.matrix;
  int failed = 0;
  for (const auto& name : names) {
    try {
      std::cout << fetch_suitesparse(name, cache_dir(s)).string() << '\n';
    } catch (const std::exception& ex) {
      std::cerr << "fetch " << name << ": " << ex.what() << '\n';
      ++failed;
    }
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-precision phi-function and exponential integrator experiments"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read key=value defaults from this file (flags take precedence)");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print every setting with its default and exit")->configurable(false);

  Settings s;
  app.add_option("--matrix", s.matrix,
                 "poisson, poisson:K, a .mtx path, or a collection name (comma-separated for several)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--t", s.t, "Final time (auto: 1 for poisson, 10 otherwise, 0.3 for ADR)")->capture_default_str();
  app.add_option("--tol", s.tol, "Krylov tolerance (auto: per matrix, 1e-12 for ADR)")->capture_default_str();
  app.add_option("--format", s.format, "Low-precision format(s): double, single, tf32, half, bfloat16")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--mchop1", s.mchop1, "First Arnoldi index in fmt1 (-1: unset)")->capture_default_str();
  app.add_option("--mchop2", s.mchop2, "First Arnoldi index in fmt2 (-1: unset)")->capture_default_str();
  app.add_option("--mode", s.mode, "Chopped product fidelity")->check(CLI::IsMember({"op", "io"}))->capture_default_str();
  app.add_option("--steps", s.steps, "Step counts: a,b,c or lo:hi for a 1-2-5 ladder")->capture_default_str();
  app.add_option("--gamma", s.gamma, "Gamma selection for the reformulated method")
      ->check(CLI::IsMember({"one", "zero", "estimate", "optimal"}))
      ->capture_default_str();
  app.add_option("--bc", s.bc, "ADR boundary condition")->check(CLI::IsMember({"neumann", "dirichlet"}))->capture_default_str();
  app.add_option("--nx", s.nx, "ADR grid points per axis")->check(CLI::Range(3, 100000))->capture_default_str();
  app.add_option("--out", s.out, "CSV output path (default stdout)");
  app.add_option("--seed", s.seed, "Seed echoed into the metadata; runs are deterministic")->capture_default_str();
  app.add_option("--cache-dir", s.cache_dir, "Matrix and reference cache (default $MPEXP_CACHE_DIR or ./suitesparse-cache)");
  app.add_option("--sign", s.sign, "Sign of the Poisson operator")->check(CLI::IsMember({-1, 1}))->capture_default_str();
  app.add_option("--scale", s.scale, "Scale of the Poisson operator")->capture_default_str();
  app.add_option("--m-max", s.m_max, "Maximum Krylov basis size")->check(CLI::Range(2, 4096))->capture_default_str();
  app.add_option("--experiment", s.experiment, "sweep-chop: 1 (p = 0) or 2 (p = 4)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  app.add_option("--grid", s.grid, "sweep-chop: coarse step of the threshold search")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--metric", s.metric, "convergence/work error metric: l2 (absolute) or linf (relative)")
      ->check(CLI::IsMember({"auto", "l2", "linf"}))
      ->capture_default_str();
  app.add_option("--ref-steps", s.ref_steps, "ADR reference step count")->check(CLI::PositiveNumber)->capture_default_str();

  auto* exp1 = app.add_subcommand("exp1", "u = exp(tA) b0: double, naive low-precision and scheduled rows");
  auto* exp2 = app.add_subcommand("exp2", "u = sum_k t^k phi_k(tA) b_k, k <= 4, all-ones b_k");
  auto* sweep = app.add_subcommand("sweep-chop", "Search mchop1/mchop2 meeting max(err_double, tol)");
  auto* conv = app.add_subcommand("convergence", "ADR error versus steps for ERE/RERE arms");
  auto* work = app.add_subcommand("work", "ADR error and effective matvecs versus steps");
  auto* fetch = app.add_subcommand("fetch", "Download collection matrices into the cache");
  fetch->add_option("names", s.names, "Matrix names (default --matrix)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::RequiredError& e) {
    if (!dump_config) return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (dump_config) {
    std::cout << app.config_to_str(true, true);
    return 0;
  }

  try {
    if (*exp1) return cmd_exp(s, 1, app);
    if (*exp2) return cmd_exp(s, 2, app);
    if (*sweep) return cmd_sweep(s, app);
    if (*conv) return cmd_convergence(s, app);
    if (*work) return cmd_work(s, app);
    if (*fetch) return cmd_fetch(s);
  } catch (const std::exception& e) {
    std::cerr << "mpexp: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
