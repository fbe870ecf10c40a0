#include "mpexp/adr.hpp"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace mpexp {

BoundaryCondition boundary_by_name(const std::string& name) {
  if (name == "neumann") return BoundaryCondition::neumann;
  if (name == "dirichlet") return BoundaryCondition::dirichlet;
  throw std::invalid_argument("unknown boundary condition '" + name + "' (expected neumann or dirichlet)");
}

const char* to_string(BoundaryCondition bc) { return bc == BoundaryCondition::neumann ? "neumann" : "dirichlet"; }

bool AdrProblem::on_boundary(Index k) const {
  const Index i = k % nx, j = k / nx;
  return i == 0 || j == 0 || i == nx - 1 || j == nx - 1;
}

void AdrProblem::validate() const {
  if (nx < 3) throw std::invalid_argument("ADR grid needs nx >= 3");
}

std::string AdrProblem::describe() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "adr nx=" << nx << " epsilon=" << epsilon << " alpha=" << alpha << " rho=" << rho << " bc=" << to_string(bc);
  return ss.str();
}

CsrMatrix adr_linear_part(const AdrProblem& p) {
  p.validate();
  const Index nx = p.nx;
  const double dx = p.dx();
  const double d = p.epsilon / (dx * dx);
  const double c = -p.alpha / (2.0 * dx);  // coefficient of (u_{+1} - u_{-1})
  std::vector<CsrMatrix::Triplet> t;
  t.reserve(5 * p.n());
  for (Index j = 0; j < nx; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const Index k = i + nx * j;
      if (p.bc == BoundaryCondition::dirichlet && p.on_boundary(k)) continue;
      t.push_back({k, k, -4.0 * d});
      // Mirror ghost: a missing neighbour is replaced by the opposite one.
      auto axis = [&](Index pos, Index stride) {
        const Index lo = pos > 0 ? k - stride : k + stride;
        const Index hi = pos < nx - 1 ? k + stride : k - stride;
        t.push_back({k, lo, d - c});
        t.push_back({k, hi, d + c});
      };
      axis(i, 1);
      axis(j, nx);
    }
  }
  return CsrMatrix::from_triplets(p.n(), p.n(), std::move(t));
}

namespace {

void check_len(const AdrProblem& p, const Vector& u) {
  if (u.size() != p.n())
    throw DimensionError("ADR state has length " + std::to_string(u.size()) + ", expected " + std::to_string(p.n()));
}

Vector rhs_with(const AdrProblem& p, const CsrMatrix& lin, const Vector& u) {
  check_len(p, u);
  Vector f = matvec(lin, u);
  for (Index k = 0; k < p.n(); ++k) {
    if (p.bc == BoundaryCondition::dirichlet && p.on_boundary(k)) continue;
    f[k] += p.rho * u[k] * (u[k] - 0.5) * (1.0 - u[k]);
  }
  return f;
}

CsrMatrix jacobian_with(const AdrProblem& p, const CsrMatrix& lin, const Vector& u) {
  check_len(p, u);
  CsrMatrix j = lin;
  for (Index k = 0; k < p.n(); ++k) {
    if (p.bc == BoundaryCondition::dirichlet && p.on_boundary(k)) continue;
    for (Index e = j.row_ptr[k]; e < j.row_ptr[k + 1]; ++e)
      if (j.col_idx[e] == k) j.values[e] += p.rho * (-3.0 * u[k] * u[k] + 3.0 * u[k] - 0.5);
  }
  return j;
}

}  // namespace

Vector adr_rhs(const AdrProblem& p, const Vector& u) { return rhs_with(p, adr_linear_part(p), u); }

CsrMatrix adr_jacobian(const AdrProblem& p, const Vector& u) { return jacobian_with(p, adr_linear_part(p), u); }

Vector adr_initial(const AdrProblem& p) {
  p.validate();
  Vector u(p.n());
  const double dx = p.dx();
  for (Index j = 0; j < p.nx; ++j) {
    for (Index i = 0; i < p.nx; ++i) {
      const double x = i * dx, y = j * dx;
      const double s = x * (1.0 - x) * y * (1.0 - y);
      u[i + p.nx * j] = 0.3 + 256.0 * s * s;
    }
  }
  return u;
}

OdeSystem adr_system(const AdrProblem& p) {
  auto lin = std::make_shared<const CsrMatrix>(adr_linear_part(p));
  OdeSystem sys;
  sys.n = p.n();
  sys.rhs = [p, lin](const Vector& u) { return rhs_with(p, *lin, u); };
  sys.jacobian = [p, lin](const Vector& u) { return jacobian_with(p, *lin, u); };
  return sys;
}

// --- reference solution cache ----------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'P', 'E', 'X', 'R', 'E', 'F', '1'};

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ULL) {
  const auto* b = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= b[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t key_hash(const AdrProblem& p, double t0, double tf, const ReferenceOptions& o) {
  std::ostringstream ss;
  ss.precision(17);
  ss << p.describe() << " t0=" << t0 << " tf=" << tf << " steps=" << o.steps << " tol=" << o.krylov_tol
     << " richardson=" << o.richardson;
  const std::string s = ss.str();
  return fnv1a(s.data(), s.size());
}

struct Header {
  char magic[8];
  std::uint64_t key;
  std::int64_t nx;
  double t0, tf, tol;
  std::int64_t steps;
  std::int64_t n;
};

bool read_cache(const std::filesystem::path& file, const Header& want, Vector& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  Header h{};
  if (!in.read(reinterpret_cast<char*>(&h), sizeof h)) return false;
  if (std::memcmp(h.magic, want.magic, sizeof kMagic) != 0 || h.key != want.key || h.nx != want.nx ||
      h.t0 != want.t0 || h.tf != want.tf || h.tol != want.tol || h.steps != want.steps || h.n != want.n)
    return false;
  Vector v(h.n);
  std::uint64_t sum = 0;
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * h.n))) return false;
  if (!in.read(reinterpret_cast<char*>(&sum), sizeof sum)) return false;
  if (sum != fnv1a(v.data(), sizeof(double) * h.n)) return false;
  out = std::move(v);
  return true;
}

void write_cache(const std::filesystem::path& file, const Header& h, const Vector& v) {
  std::filesystem::create_directories(file.parent_path());
  const auto tmp = std::filesystem::path(file.string() + ".part");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;
    const std::uint64_t sum = fnv1a(v.data(), sizeof(double) * v.size());
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
    out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
    if (!out) return;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

Vector run_ere(const AdrProblem& p, double t0, double tf, int steps, double tol) {
  IntegratorConfig cfg;
  cfg.method = Method::ere;
  cfg.steps = steps;
  cfg.t0 = t0;
  cfg.tf = tf;
  cfg.krylov_tol = tol;
  return integrate(adr_system(p), adr_initial(p), cfg).u;
}

}  // namespace

std::filesystem::path reference_cache_file(const AdrProblem& p, double t0, double tf, const ReferenceOptions& o) {
  char name[64];
  std::snprintf(name, sizeof name, "adr_ref_%016llx.bin", static_cast<unsigned long long>(key_hash(p, t0, tf, o)));
  return o.cache_dir / name;
}

Vector reference_solution(const AdrProblem& p, double t0, double tf, const ReferenceOptions& o) {
  p.validate();
  if (o.steps < 1) throw std::invalid_argument("reference needs at least one step");
  Header h{};
  std::memcpy(h.magic, kMagic, sizeof kMagic);
  h.key = key_hash(p, t0, tf, o);
  h.nx = p.nx;
  h.t0 = t0;
  h.tf = tf;
  h.tol = o.krylov_tol;
  h.steps = o.steps;
  h.n = p.n();

  const bool cached = !o.cache_dir.empty();
  const auto file = cached ? reference_cache_file(p, t0, tf, o) : std::filesystem::path{};
  Vector u;
  if (cached && read_cache(file, h, u)) return u;

  Vector fine = run_ere(p, t0, tf, o.richardson ? 2 * o.steps : o.steps, o.krylov_tol);
  if (o.richardson) {
    const Vector coarse = run_ere(p, t0, tf, o.steps, o.krylov_tol);
    u = (4.0 * fine - coarse) / 3.0;
  } else {
    u = std::move(fine);
  }
  if (cached) write_cache(file, h, u);
  return u;
}

}  // namespace mpexp
