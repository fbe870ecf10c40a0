#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "mpexp/adr.hpp"

using namespace mpexp;
namespace fs = std::filesystem;

namespace {

Vector random_state(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 1.4);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// Direct grid evaluation of eps (u_xx + u_yy) - alpha (u_x + u_y) + rho u (u - 1/2)(1 - u).
Vector stencil_oracle(const AdrProblem& p, const Vector& u) {
  const Index nx = p.nx;
  const double h = 1.0 / (nx - 1);
  auto at = [&](Index i, Index j) {
    if (p.bc == BoundaryCondition::neumann) {
      if (i < 0) i = 1;
      if (i >= nx) i = nx - 2;
      if (j < 0) j = 1;
      if (j >= nx) j = nx - 2;
    }
    return u[i + nx * j];
  };
  Vector f = Vector::Zero(u.size());
  for (Index j = 0; j < nx; ++j) {
    for (Index i = 0; i < nx; ++i) {
      if (p.bc == BoundaryCondition::dirichlet && (i == 0 || j == 0 || i == nx - 1 || j == nx - 1)) continue;
      const double c = at(i, j);
      const double lap = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * c) / (h * h);
      const double grad = (at(i + 1, j) - at(i - 1, j) + at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
      f[i + nx * j] = p.epsilon * lap - p.alpha * grad + p.rho * c * (c - 0.5) * (1.0 - c);
    }
  }
  return f;
}

std::uint64_t fnv1a(const void* data, std::size_t len) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* b = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= b[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

TEST_CASE("problem description") {
  AdrProblem p;
  CHECK(p.n() == 441);
  CHECK(p.dx() == 0.05);
  CHECK(p.on_boundary(0));
  CHECK(p.on_boundary(20));
  CHECK(p.on_boundary(21));
  CHECK_FALSE(p.on_boundary(22));
  CHECK(p.on_boundary(440));
  CHECK(boundary_by_name("dirichlet") == BoundaryCondition::dirichlet);
  CHECK_THROWS_AS(boundary_by_name("periodic"), std::invalid_argument);
  CHECK(p.describe().find("nx=21") != std::string::npos);
  p.nx = 2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("initial condition") {
  const AdrProblem p;
  const Vector u = adr_initial(p);
  CHECK(u[0] == 0.3);
  CHECK(u[10 + 21 * 10] == doctest::Approx(1.3));  // centre: 256 (1/16)^2 + 0.3
  CHECK(u.minCoeff() == 0.3);
  CHECK(u.maxCoeff() == doctest::Approx(1.3));
}

TEST_CASE("right-hand side matches the grid stencil") {
  for (auto bc : {BoundaryCondition::neumann, BoundaryCondition::dirichlet}) {
    for (Index nx : {3, 7, 21}) {
      AdrProblem p;
      p.nx = nx;
      p.bc = bc;
      const Vector u = random_state(p.n(), 50 + nx);
      const Vector f = adr_rhs(p, u);
      const Vector ref = stencil_oracle(p, u);
      CAPTURE(nx);
      CAPTURE(to_string(bc));
      CHECK((f - ref).lpNorm<Eigen::Infinity>() <= 1e-12 * ref.lpNorm<Eigen::Infinity>());
    }
  }
  // Constant states are steady for the linear part with Neumann closure.
  AdrProblem p;
  CHECK(matvec(adr_linear_part(p), Vector::Constant(p.n(), 0.7)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK_THROWS_AS(adr_rhs(p, Vector::Ones(3)), DimensionError);
}

TEST_CASE("jacobian matches finite differences") {
  for (auto bc : {BoundaryCondition::neumann, BoundaryCondition::dirichlet}) {
    AdrProblem p;
    p.nx = 9;
    p.bc = bc;
    const Vector u = random_state(p.n(), 77);
    const DenseMatrix j = adr_jacobian(p, u).to_dense();
    const double d = 1e-6;
    DenseMatrix fd(p.n(), p.n());
    for (Index k = 0; k < p.n(); ++k) {
      Vector up = u, um = u;
      up[k] += d;
      um[k] -= d;
      fd.col(k) = (adr_rhs(p, up) - adr_rhs(p, um)) / (2.0 * d);
    }
    CAPTURE(to_string(bc));
    CHECK((j - fd).cwiseAbs().maxCoeff() / j.cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("only the diagonal of the jacobian depends on u") {
  const AdrProblem p;
  const CsrMatrix j0 = adr_jacobian(p, Vector::Zero(p.n()));
  const CsrMatrix j1 = adr_jacobian(p, random_state(p.n(), 3));
  REQUIRE(j0.col_idx == j1.col_idx);
  const DenseMatrix diff = j1.to_dense() - j0.to_dense();
  CHECK((diff - DenseMatrix(diff.diagonal().asDiagonal())).isZero(0.0));
  // At u = 0 the reaction derivative is -1/2.
  const DenseMatrix lin = adr_linear_part(p).to_dense();
  CHECK((j0.to_dense() - lin + 0.5 * DenseMatrix::Identity(p.n(), p.n())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dirichlet boundary rows vanish") {
  AdrProblem p;
  p.bc = BoundaryCondition::dirichlet;
  const CsrMatrix j = adr_jacobian(p, random_state(p.n(), 5));
  const Vector f = adr_rhs(p, random_state(p.n(), 6));
  for (Index k = 0; k < p.n(); ++k) {
    if (!p.on_boundary(k)) continue;
    CHECK(j.row_ptr[k + 1] == j.row_ptr[k]);
    CHECK(f[k] == 0.0);
  }
  // Interior diffusion is symmetric; advection gives the antisymmetric part.
  AdrProblem q = p;
  q.alpha = 0.0;
  const DenseMatrix d = adr_linear_part(q).to_dense();
  CHECK((d - d.transpose()).block(q.nx + 1, q.nx + 1, q.nx - 2, q.nx - 2).isZero(0.0));
}

TEST_CASE("mu2 bound of the jacobian") {
  const AdrProblem p;
  const CsrMatrix j = adr_jacobian(p, adr_initial(p));
  const DenseMatrix jd = j.to_dense();
  const double lam = Eigen::SelfAdjointEigenSolver<DenseMatrix>(0.5 * (jd + jd.transpose())).eigenvalues().maxCoeff();
  const double bound = mu2_upper_bound(j);
  CHECK(bound >= lam);
  // Neumann at u = 0 with d = eps / dx^2 = 20 and c = 1 / (2 dx) = 10. The worst
  // Gershgorin row is the corner-adjacent node (nx-2, nx-2): its neighbours toward
  // the boundary are mirrored nodes with coupling 2d back, so each axis contributes
  // ((d + c) + 2d) / 2 + ((d - c) + (d + c)) / 2 = 55, giving -4d - 1/2 + 110.
  const double at_zero = mu2_upper_bound(adr_jacobian(p, Vector::Zero(p.n())));
  CHECK(at_zero == doctest::Approx(29.5).epsilon(1e-12));
}

TEST_CASE("shared linear part") {
  const AdrProblem p;
  const OdeSystem s = adr_system(p);
  const Vector u = random_state(p.n(), 8);
  CHECK(s.n == p.n());
  CHECK(s.rhs(u) == adr_rhs(p, u));
  CHECK(s.jacobian(u).values == adr_jacobian(p, u).values);
}

TEST_CASE("reference solution and its cache") {
  AdrProblem p;
  p.nx = 7;
  ReferenceOptions o;
  o.steps = 200;
  o.cache_dir = fs::temp_directory_path() / ("mpexp_ref_" + std::to_string(::getpid()));
  fs::remove_all(o.cache_dir);

  const Vector a = reference_solution(p, 0.0, 0.3, o);
  const fs::path file = reference_cache_file(p, 0.0, 0.3, o);
  REQUIRE(fs::exists(file));
  CHECK(fs::file_size(file) == 64 + 8 * static_cast<std::uintmax_t>(p.n()) + 8);
  CHECK(a.minCoeff() >= 0.29);
  CHECK(a.maxCoeff() <= 1.31);

  ReferenceOptions uncached = o;
  uncached.cache_dir.clear();
  const Vector b = reference_solution(p, 0.0, 0.3, uncached);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);

  // A well-formed edited entry is served from the cache.
  std::vector<char> bytes(fs::file_size(file));
  std::ifstream(file, std::ios::binary).read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  const double patched = 42.0;
  std::memcpy(bytes.data() + 64, &patched, 8);
  const std::uint64_t sum = fnv1a(bytes.data() + 64, 8 * p.n());
  std::memcpy(bytes.data() + 64 + 8 * p.n(), &sum, 8);
  std::ofstream(file, std::ios::binary | std::ios::trunc).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHECK(reference_solution(p, 0.0, 0.3, o)[0] == 42.0);

  // A corrupt entry is recomputed and rewritten.
  bytes[70] ^= 0x55;
  std::ofstream(file, std::ios::binary | std::ios::trunc).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  const Vector c = reference_solution(p, 0.0, 0.3, o);
  CHECK(std::memcmp(a.data(), c.data(), sizeof(double) * a.size()) == 0);
  CHECK(reference_solution(p, 0.0, 0.3, o) == a);

  // Different options use a different file.
  ReferenceOptions other = o;
  other.steps = 100;
  CHECK(reference_cache_file(p, 0.0, 0.3, other) != file);
  fs::remove_all(o.cache_dir);
}

TEST_CASE("dirichlet reference keeps the boundary value") {
  AdrProblem p;
  p.nx = 7;
  p.bc = BoundaryCondition::dirichlet;
  ReferenceOptions o;
  o.steps = 100;
  const Vector u = reference_solution(p, 0.0, 0.3, o);
  for (Index k = 0; k < p.n(); ++k)
    if (p.on_boundary(k)) CHECK(u[k] == doctest::Approx(0.3).epsilon(1e-13));
}
