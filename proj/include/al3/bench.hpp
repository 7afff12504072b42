#pragma once

// Parameter sweeps over (level, γ) in the layout of the usual FGMRES
// result tables: Iter (CPU) | Err | Iter_in | Iter_pcg.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "al3/block_al.hpp"
#include "al3/parallel.hpp"
#include "al3/probgen.hpp"

namespace al3 {

struct BenchConfig {
  std::vector<std::size_t> levels{1, 2, 3};
  std::vector<double> gammas{1, 10, 100, 1000};
  double alpha_ratio = 2.0;  // α = alpha_ratio·γ
  std::size_t reps = 10;
  std::uint64_t seed = 0;  // problem seed; right-hand sides use streams of it
  GenSpec gen;             // level and seed are overwritten per cell
  PrecondParams precond;   // γ and α are overwritten per cell
  double tol = 1e-7;
  std::size_t maxit = 500;
  std::size_t threads = 0;  // 0: thread_budget()

  void validate() const {
    if (levels.empty() || gammas.empty()) throw InvalidInput("bench: need at least one level and one gamma");
    if (reps < 1) throw InvalidInput("bench: reps must be >= 1");
    if (!(alpha_ratio >= 1.0)) throw InvalidInput("bench: alpha must be >= gamma");
    if (!(tol > 0.0)) throw InvalidInput("bench: tol must be positive");
    for (double g : gammas)
      if (!(g > 0.0)) throw InvalidInput("bench: gamma values must be positive");
  }
};

struct BenchRow {
  std::size_t level = 0;
  std::size_t size = 0;
  double gamma = 0.0, alpha = 0.0;
  std::size_t iter = 0;  // averages rounded to the nearest integer
  double cpu = 0.0;      // mean wall seconds per solve, setup included
  double err = 0.0;      // mean relative error
  std::size_t iter_in = 0;
  std::size_t iter_pcg = 0;
  std::size_t converged_reps = 0;
  std::size_t reps = 0;

  [[nodiscard]] bool converged() const { return converged_reps == reps; }
};

/// Seeded reference solution for repetition `rep`.
inline Vector bench_reference(std::size_t size, std::uint64_t seed, std::size_t rep) {
  return CounterRng(seed, 0x5eed0000ULL + rep).uniform_vector(size);
}

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  cfg.validate();
  const std::size_t threads = cfg.threads ? cfg.threads : thread_budget();

  std::vector<BlockSystem> systems;
  systems.reserve(cfg.levels.size());
  for (std::size_t level : cfg.levels) {
    GenSpec g = cfg.gen;
    g.level = level;
    g.seed = cfg.seed;
    systems.push_back(generate(g));
  }

  const std::size_t ng = cfg.gammas.size();
  std::vector<BenchRow> rows(cfg.levels.size() * ng);
  parallel_for(
      rows.size(),
      [&](std::size_t cell) {
        const std::size_t li = cell / ng;
        const BlockSystem& sys = systems[li];
        PrecondParams params = cfg.precond;
        params.gamma = cfg.gammas[cell % ng];
        params.alpha = cfg.alpha_ratio * params.gamma;

        BenchRow& row = rows[cell];
        row.level = cfg.levels[li];
        row.size = sys.size();
        row.gamma = params.gamma;
        row.alpha = params.alpha;
        row.reps = cfg.reps;
        double iter = 0, in = 0, pcgs = 0;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
          SolveOptions opt;
          opt.tol = cfg.tol;
          opt.maxit = cfg.maxit;
          opt.reference = bench_reference(sys.size(), cfg.seed, r);
          const Vector b = apply_block_system(sys, *opt.reference);
          const auto out = solve(sys, params, b, opt);
          iter += static_cast<double>(out.report.outer_iters);
          in += static_cast<double>(out.report.iter_in);
          pcgs += static_cast<double>(out.report.iter_pcg);
          row.cpu += out.report.wall_seconds;
          row.err += *out.report.err;
          if (out.report.converged) ++row.converged_reps;
        }
        const double k = static_cast<double>(cfg.reps);
        row.iter = static_cast<std::size_t>(std::lround(iter / k));
        row.iter_in = static_cast<std::size_t>(std::lround(in / k));
        row.iter_pcg = static_cast<std::size_t>(std::lround(pcgs / k));
        row.cpu /= k;
        row.err /= k;
      },
      threads);
  return rows;
}

// ---------------------------------------------------------------------------
// Rendering. Both formats print the same formatted fields.

inline const std::vector<std::string>& bench_columns() {
  static const std::vector<std::string> cols{"level", "size", "gamma", "alpha", "iter", "cpu",
                                             "err",   "iter_in", "iter_pcg", "converged"};
  return cols;
}

inline std::vector<std::string> bench_fields(const BenchRow& r) {
  auto fmt = [](const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf);
  };
  return {std::to_string(r.level),
          std::to_string(r.size),
          fmt("%g", r.gamma),
          fmt("%g", r.alpha),
          std::to_string(r.iter),
          fmt("%.3f", r.cpu),
          fmt("%.4e", r.err),
          std::to_string(r.iter_in),
          std::to_string(r.iter_pcg),
          r.converged() ? "yes" : "NO(" + std::to_string(r.converged_reps) + "/" + std::to_string(r.reps) + ")"};
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  const auto& cols = bench_columns();
  for (std::size_t j = 0; j < cols.size(); ++j) os << (j ? "," : "") << cols[j];
  os << '\n';
  for (const auto& r : rows) {
    const auto f = bench_fields(r);
    for (std::size_t j = 0; j < f.size(); ++j) os << (j ? "," : "") << f[j];
    os << '\n';
  }
}

inline void write_bench_table(std::ostream& os, const std::vector<BenchRow>& rows) {
  std::vector<std::vector<std::string>> cells{bench_columns()};
  for (const auto& r : rows) cells.push_back(bench_fields(r));
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& c : cells)
    for (std::size_t j = 0; j < c.size(); ++j) width[j] = std::max(width[j], c[j].size());
  for (const auto& c : cells) {
    std::string line;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j) line += "  ";
      line += std::string(width[j] - c[j].size(), ' ') + c[j];
    }
    os << line << '\n';
  }
}

inline bool all_converged(const std::vector<BenchRow>& rows) {
  for (const auto& r : rows)
    if (!r.converged()) return false;
  return true;
}

}  // namespace al3
