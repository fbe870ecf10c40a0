#pragma once

#include "mpexp/sparse.hpp"

namespace mpexp {

/// exp(M) for a small dense matrix by scaling and squaring with diagonal Padé
/// approximants of degree 3, 5, 7, 9 or 13, picked from the 1-norm so the
/// backward error stays below unit roundoff. Throws Error on non-finite input.
DenseMatrix dense_expm(const DenseMatrix& m);

/// Matrix 1-norm (max column sum).
double norm1(const DenseMatrix& m);

}  // namespace mpexp
