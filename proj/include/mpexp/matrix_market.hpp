#pragma once

#include <filesystem>
#include <iosfwd>

#include "mpexp/sparse.hpp"

namespace mpexp {

/// Reads a Matrix Market `coordinate` file with field real/integer/pattern and
/// symmetry general/symmetric. Pattern entries become 1.0, symmetric storage is
/// mirrored, duplicates are summed. Throws ParseError.
CsrMatrix read_matrix_market(std::istream& in);
CsrMatrix read_matrix_market(const std::filesystem::path& path);

/// Writes `coordinate real general` with 17 significant digits.
void write_matrix_market(std::ostream& out, const CsrMatrix& a);

}  // namespace mpexp
