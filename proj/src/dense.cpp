#include "mpexp/dense.hpp"

#include <array>
#include <cmath>

#include <Eigen/LU>

#include "mpexp/errors.hpp"

namespace mpexp {

namespace {

// Largest 1-norm for which each Padé degree meets the binary64 backward-error bound.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

DenseMatrix solve_pade(const DenseMatrix& u, const DenseMatrix& v) {
  return (v - u).partialPivLu().solve(v + u);
}

DenseMatrix pade_low(const DenseMatrix& a, int degree) {
  static constexpr std::array<double, 4> b3 = {120., 60., 12., 1.};
  static constexpr std::array<double, 6> b5 = {30240., 15120., 3360., 420., 30., 1.};
  static constexpr std::array<double, 8> b7 = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static constexpr std::array<double, 10> b9 = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                                2162160.,     110880.,     3960.,       90.,        1.};
  const double* b = degree == 3 ? b3.data() : degree == 5 ? b5.data() : degree == 7 ? b7.data() : b9.data();

  const Index n = a.rows();
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  const DenseMatrix a2 = a * a;
  DenseMatrix even_power = id;
  DenseMatrix u_inner = b[1] * id;
  DenseMatrix v = b[0] * id;
  for (int k = 2; k <= degree; k += 2) {
    even_power = even_power * a2;
    v += b[k] * even_power;
    u_inner += b[k + 1] * even_power;
  }
  return solve_pade(a * u_inner, v);
}

DenseMatrix pade13(const DenseMatrix& a) {
  static constexpr std::array<double, 14> b = {
      64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800., 129060195264000.,
      10559470521600.,    670442572800.,      33522128640.,      1323241920.,       40840800.,
      960960.,            16380.,             182.,              1.};
  const Index n = a.rows();
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  const DenseMatrix a2 = a * a;
  const DenseMatrix a4 = a2 * a2;
  const DenseMatrix a6 = a4 * a2;
  const DenseMatrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const DenseMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return solve_pade(u, v);
}

}  // namespace

double norm1(const DenseMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

DenseMatrix dense_expm(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("dense_expm: matrix must be square");
  if (!m.allFinite()) throw Error("dense_expm: non-finite entry in argument");
  if (m.rows() == 0) return m;

  const double nrm = norm1(m);
  if (nrm <= kTheta3) return pade_low(m, 3);
  if (nrm <= kTheta5) return pade_low(m, 5);
  if (nrm <= kTheta7) return pade_low(m, 7);
  if (nrm <= kTheta9) return pade_low(m, 9);

  const int s = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / kTheta13))));
  DenseMatrix x = pade13(m * std::ldexp(1.0, -s));
  for (int i = 0; i < s; ++i) x = x * x;
  return x;
}

}  // namespace mpexp
