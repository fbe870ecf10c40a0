#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpexp/experiments.hpp"

using namespace mpexp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(MPEXP_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("exp1 output") {
  const Run r = run_cli("exp1 --matrix poisson:30 --t 0.01 --tol 1e-10 --format half,single --mode io");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# mpexp", 0) == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 4);
  const std::vector<std::string> header = {"matrix", "experiment", "arm", "format", "mchop1", "mchop2",
                                           "mode", "tol", "err", "final_m", "substeps", "rejections",
                                           "mv_double", "mv_single", "mv_tf32", "mv_half", "mv_bfloat16", "status"};
  CHECK(rows[0] == header);
  CHECK(rows[1][column(header, "arm")] == "double");
  CHECK(rows[2][column(header, "format")] == "half");
  CHECK(rows[3][column(header, "format")] == "single");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][column(header, "status")] == "ok");

  // The double row agrees with a library run.
  const auto e = make_phi_experiment("poisson:30", poisson2d(30, 2500.0, -1), 1, 0.01, 1e-10);
  const PhiRun lib = run_phi(e, phi_reference(e), PrecisionSchedule::working());
  const double cli_err = std::stod(rows[1][column(header, "err")]);
  CHECK(cli_err == doctest::Approx(lib.err).epsilon(1e-5));
  CHECK(std::stol(rows[1][column(header, "mv_double")]) == lib.result.counters.count("double"));
}

TEST_CASE("mixed rows and output file") {
  const fs::path out = fs::temp_directory_path() / ("mpexp_cli_" + std::to_string(::getpid()) + ".csv");
  const Run r = run_cli("exp2 --matrix poisson:20 --t 0.01 --tol 1e-8 --format bfloat16 --mchop1 2 --mchop2 4 --out " +
                        out.string());
  REQUIRE(r.code == 0);
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto rows = csv_rows(ss.str());
  REQUIRE(rows.size() == 4);
  CHECK(rows[3][2] == "mixed");
  CHECK(rows[3][4] == "2");
  CHECK(rows[3][5] == "4");
  fs::remove(out);
}

TEST_CASE("dump-config and config files") {
  const Run d = run_cli("--dump-config");
  CHECK(d.code == 0);
  CHECK(d.out.find("tol") != std::string::npos);
  CHECK(d.out.find("dump-config") == std::string::npos);

  const fs::path cfg = fs::temp_directory_path() / ("mpexp_cfg_" + std::to_string(::getpid()) + ".ini");
  std::ofstream(cfg) << "matrix=poisson:10\nt=0.01\ntol=1e-9\nformat=single,half\n";
  const Run r = run_cli("exp1 --config " + cfg.string());
  CHECK(r.code == 0);
  CHECK(csv_rows(r.out).size() == 4);
  CHECK(r.out.find("# matrix=\"poisson:10\"") != std::string::npos);
  fs::remove(cfg);
}

TEST_CASE("errors give nonzero exit") {
  const fs::path cache = fs::temp_directory_path() / ("mpexp_clicache_" + std::to_string(::getpid()));
  CHECK(run_cli("exp1 --matrix no_such_matrix --cache-dir " + cache.string()).code != 0);
  CHECK(run_cli("exp1 --matrix poisson:5 --mode sideways").code != 0);
  CHECK(run_cli("exp1 --matrix poisson:5 --mchop1 5 --mchop2 2").code != 0);
  CHECK(run_cli("bogus").code != 0);
  fs::remove_all(cache);
}

TEST_CASE("convergence subcommand header") {
  const fs::path cache = fs::temp_directory_path() / ("mpexp_clicache2_" + std::to_string(::getpid()));
  const Run r = run_cli("convergence --nx 5 --steps 10:20 --ref-steps 200 --cache-dir " + cache.string());
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"steps", "ere_dbl_error", "ere_low_error", "rere_low_error", "rere_mixed_error"});
  fs::remove_all(cache);
}
