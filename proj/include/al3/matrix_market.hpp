#pragma once

// Matrix Market coordinate/real reader and writer. Symmetric files are
// expanded to full storage; duplicate entries are summed. Output is always
// `general` with 17 significant digits so that a write/read round trip is
// bit-exact.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "al3/error.hpp"
#include "al3/sparse.hpp"

namespace al3 {

namespace detail {

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline SparseMatrix mm_read(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty Matrix Market stream");
  ++line_no;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError(line_no, "missing %%MatrixMarket banner");
  object = detail::lowercase(object);
  format = detail::lowercase(format);
  field = detail::lowercase(field);
  symmetry = detail::lowercase(symmetry);
  if (object != "matrix") throw ParseError(line_no, "unsupported object '" + object + "'");
  if (format != "coordinate") throw ParseError(line_no, "unsupported format '" + format + "'");
  if (field != "real") throw ParseError(line_no, "field must be real, got '" + field + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw ParseError(line_no, "unsupported symmetry '" + symmetry + "'");

  // size line after comments
  long long nrows = -1, ncols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sz(line);
    if (!(sz >> nrows >> ncols >> nnz) || nrows < 0 || ncols < 0 || nnz < 0)
      throw ParseError(line_no, "malformed size line");
    break;
  }
  if (nnz < 0) throw ParseError(line_no, "missing size line");
  if (symmetric && nrows != ncols) throw ParseError(line_no, "symmetric matrix must be square");

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  long long read = 0;
  while (read < nnz && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    long long i, j;
    double v;
    if (!(entry >> i >> j >> v)) throw ParseError(line_no, "malformed entry");
    std::string extra;
    if (entry >> extra) throw ParseError(line_no, "trailing data in entry");
    if (i < 1 || i > nrows || j < 1 || j > ncols)
      throw ParseError(line_no, "index (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") out of declared bounds");
    const auto r = static_cast<std::size_t>(i - 1), c = static_cast<std::size_t>(j - 1);
    t.push_back({r, c, v});
    if (symmetric && r != c) t.push_back({c, r, v});
    ++read;
  }
  if (read < nnz)
    throw ParseError(line_no, "expected " + std::to_string(nnz) + " entries, found " +
                                  std::to_string(read));
  return SparseMatrix::from_triplets(static_cast<std::size_t>(nrows),
                                     static_cast<std::size_t>(ncols), t);
}

inline SparseMatrix mm_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return mm_read(in);
}

inline void mm_write(const SparseMatrix& a, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto rc = a.row_cols(i);
    const auto rv = a.row_values(i);
    for (std::size_t k = 0; k < rc.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", rv[k]);
      out << (i + 1) << ' ' << (rc[k] + 1) << ' ' << buf << '\n';
    }
  }
}

inline void mm_write(const SparseMatrix& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  mm_write(a, out);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace al3
