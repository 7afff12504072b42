#pragma once

// The block 3x3 system
//
//   [ A11    A12   0  ] [u1]   [b1]
//   [ -A12ᵀ  A22   Bᵀ ] [u2] = [b2]
//   [ 0      B     0  ] [u3]   [b3]
//
// plus the pressure mass matrix Mp. A21 = -A12ᵀ is implied, never stored.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "al3/error.hpp"
#include "al3/matrix_market.hpp"
#include "al3/sparse.hpp"

namespace al3 {

class BlockSystem {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  BlockSystem(SparseMatrix a11, SparseMatrix a12, SparseMatrix a22, SparseMatrix b, SparseMatrix mp)
      : a11_(std::move(a11)), a12_(std::move(a12)), a22_(std::move(a22)), b_(std::move(b)),
        mp_(std::move(mp)) {
    const std::size_t n = a11_.rows(), m = a22_.rows(), p = b_.rows();
    auto shape = [](const SparseMatrix& x, std::size_t r, std::size_t c, const char* name) {
      if (x.rows() != r || x.cols() != c)
        throw DimensionMismatch(std::string("BlockSystem: ") + name + " is " +
                                std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                ", expected " + std::to_string(r) + "x" + std::to_string(c));
    };
    shape(a11_, n, n, "A11");
    shape(a12_, n, m, "A12");
    shape(a22_, m, m, "A22");
    shape(b_, p, m, "B");
    shape(mp_, p, p, "Mp");
    if (symmetry_residual(a11_) > kSymmetryTolerance) throw InvalidInput("BlockSystem: A11 not symmetric");
    if (symmetry_residual(a22_) > kSymmetryTolerance) throw InvalidInput("BlockSystem: A22 not symmetric");
    if (symmetry_residual(mp_) > kSymmetryTolerance) throw InvalidInput("BlockSystem: Mp not symmetric");
  }

  [[nodiscard]] const SparseMatrix& a11() const noexcept { return a11_; }
  [[nodiscard]] const SparseMatrix& a12() const noexcept { return a12_; }
  [[nodiscard]] const SparseMatrix& a22() const noexcept { return a22_; }
  [[nodiscard]] const SparseMatrix& b() const noexcept { return b_; }
  [[nodiscard]] const SparseMatrix& mp() const noexcept { return mp_; }

  [[nodiscard]] std::size_t n() const noexcept { return a11_.rows(); }
  [[nodiscard]] std::size_t m() const noexcept { return a22_.rows(); }
  [[nodiscard]] std::size_t p() const noexcept { return b_.rows(); }
  [[nodiscard]] std::size_t size() const noexcept { return n() + m() + p(); }

  friend bool operator==(const BlockSystem&, const BlockSystem&) = default;

 private:
  SparseMatrix a11_, a12_, a22_, b_, mp_;
};

/// Views of the three blocks of a stacked vector (u1; u2; u3).
template <class T>
struct BlockSpans {
  std::span<T> u1, u2, u3;
};

template <class T>
BlockSpans<T> split_blocks(const BlockSystem& sys, std::span<T> u) {
  detail::require_size(u.size(), sys.size(), "block vector");
  return {u.subspan(0, sys.n()), u.subspan(sys.n(), sys.m()), u.subspan(sys.n() + sys.m(), sys.p())};
}

inline Vector stack(std::span<const double> u1, std::span<const double> u2, std::span<const double> u3) {
  Vector u;
  u.reserve(u1.size() + u2.size() + u3.size());
  u.insert(u.end(), u1.begin(), u1.end());
  u.insert(u.end(), u2.begin(), u2.end());
  u.insert(u.end(), u3.begin(), u3.end());
  return u;
}

/// The original (unaugmented) product 𝒜u.
inline Vector apply_block_system(const BlockSystem& sys, std::span<const double> u) {
  const auto in = split_blocks(sys, u);
  Vector out(sys.size());
  const auto o = split_blocks(sys, std::span<double>(out));
  sys.a11().multiply(in.u1, o.u1);
  sys.a12().multiply_add(1.0, in.u2, o.u1);
  sys.a22().multiply(in.u2, o.u2);
  sys.a12().multiply_transpose_add(-1.0, in.u1, o.u2);
  sys.b().multiply_transpose_add(1.0, in.u3, o.u2);
  sys.b().multiply(in.u2, o.u3);
  return out;
}

// ---------------------------------------------------------------------------
// On-disk layout: a11.mtx a12.mtx a22.mtx b.mtx mp.mtx + manifest.txt
// (key=value lines; n, m and p are required, anything else is provenance).

using Manifest = std::map<std::string, std::string>;

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Manifest out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "manifest line without '='");
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [k, v] : m) out << k << '=' << v << '\n';
}

inline void save_block_system(const std::filesystem::path& dir, const BlockSystem& sys,
                              Manifest provenance = {}) {
  std::filesystem::create_directories(dir);
  mm_write(sys.a11(), dir / "a11.mtx");
  mm_write(sys.a12(), dir / "a12.mtx");
  mm_write(sys.a22(), dir / "a22.mtx");
  mm_write(sys.b(), dir / "b.mtx");
  mm_write(sys.mp(), dir / "mp.mtx");
  provenance["n"] = std::to_string(sys.n());
  provenance["m"] = std::to_string(sys.m());
  provenance["p"] = std::to_string(sys.p());
  write_manifest(dir / "manifest.txt", provenance);
}

inline BlockSystem load_block_system(const std::filesystem::path& dir) {
  const Manifest man = read_manifest(dir / "manifest.txt");
  auto count = [&](const char* key) -> std::size_t {
    const auto it = man.find(key);
    if (it == man.end()) throw InvalidInput(std::string("manifest: missing key ") + key);
    return std::stoull(it->second);
  };
  BlockSystem sys(mm_read(dir / "a11.mtx"), mm_read(dir / "a12.mtx"), mm_read(dir / "a22.mtx"),
                  mm_read(dir / "b.mtx"), mm_read(dir / "mp.mtx"));
  if (sys.n() != count("n") || sys.m() != count("m") || sys.p() != count("p"))
    throw DimensionMismatch("manifest sizes disagree with the matrix files in " + dir.string());
  return sys;
}

}  // namespace al3
