#include "mpexp/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mpexp/errors.hpp"

namespace mpexp {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

enum class Field { real, integer, pattern };
enum class Symmetry { general, symmetric };

struct Header {
  Field field;
  Symmetry symmetry;
};

Header parse_header(const std::string& line) {
  using K = ParseError::Kind;
  std::istringstream ss(line);
  std::string banner, object, format, field, symmetry;
  ss >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError(K::header, "missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") throw ParseError(K::header, "unsupported object '" + object + "'");
  if (format != "coordinate") throw ParseError(K::unsupported, "only coordinate format is supported, got '" + format + "'");

  Header h{};
  if (field == "real" || field == "double") h.field = Field::real;
  else if (field == "integer") h.field = Field::integer;
  else if (field == "pattern") h.field = Field::pattern;
  else if (field == "complex") throw ParseError(K::unsupported, "complex matrices are not supported");
  else throw ParseError(K::header, "unknown field '" + field + "'");

  if (symmetry == "general") h.symmetry = Symmetry::general;
  else if (symmetry == "symmetric") h.symmetry = Symmetry::symmetric;
  else if (symmetry == "skew-symmetric" || symmetry == "hermitian")
    throw ParseError(K::unsupported, "symmetry '" + symmetry + "' is not supported");
  else throw ParseError(K::header, "unknown symmetry '" + symmetry + "'");
  return h;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

CsrMatrix read_matrix_market(std::istream& in) {
  using K = ParseError::Kind;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(K::truncated, "empty Matrix Market stream");
  const Header h = parse_header(line);

  if (!next_data_line(in, line)) throw ParseError(K::truncated, "missing size line");
  long long rows = 0, cols = 0, entries = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
      throw ParseError(K::syntax, "malformed size line: '" + line + "'");
  }
  if (h.symmetry == Symmetry::symmetric && rows != cols)
    throw ParseError(K::header, "symmetric matrix must be square");

  std::vector<CsrMatrix::Triplet> t;
  t.reserve(static_cast<std::size_t>(h.symmetry == Symmetry::symmetric ? 2 * entries : entries));
  for (long long e = 0; e < entries; ++e) {
    if (!next_data_line(in, line))
      throw ParseError(K::truncated, "stream ended after " + std::to_string(e) + " of " + std::to_string(entries) + " entries");
    std::istringstream ss(line);
    long long i = 0, j = 0;
    double v = 1.0;
    if (!(ss >> i >> j)) throw ParseError(K::syntax, "malformed entry line: '" + line + "'");
    if (h.field != Field::pattern && !(ss >> v)) throw ParseError(K::syntax, "entry without a value: '" + line + "'");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(K::index_out_of_range, "entry (" + std::to_string(i) + ", " + std::to_string(j) + ") outside " +
                                                  std::to_string(rows) + " x " + std::to_string(cols));
    t.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), v});
    if (h.symmetry == Symmetry::symmetric && i != j) t.push_back({static_cast<Index>(j - 1), static_cast<Index>(i - 1), v});
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(t));
}

CsrMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::truncated, "cannot open " + path.string());
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.n_rows << ' ' << a.n_cols << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < a.n_rows; ++i)
    for (Index k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) out << i + 1 << ' ' << a.col_idx[k] + 1 << ' ' << a.values[k] << '\n';
}

}  // namespace mpexp
