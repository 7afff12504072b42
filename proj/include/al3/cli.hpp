#pragma once

// Command-line front end: gen, solve, spectrum, bench.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "al3/bench.hpp"
#include "al3/block_al.hpp"
#include "al3/probgen.hpp"
#include "al3/spectral.hpp"

namespace al3 {

class UsageError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

enum class Command { gen, solve, spectrum, bench, help };

namespace exit_code {
constexpr int ok = 0;
constexpr int not_converged = 1;
constexpr int usage = 2;
constexpr int failure = 3;
}  // namespace exit_code

struct RunConfig {
  Command command = Command::help;
  std::string help_text;

  std::optional<std::filesystem::path> dir;  // load instead of generating
  GenSpec gen;
  PrecondParams precond;  // gamma/alpha hold the single-γ values
  std::vector<double> gammas{1.0};
  std::optional<double> alpha;  // explicit α; otherwise 2γ
  double tol = 1e-7;
  std::size_t maxit = 500;
  std::size_t reps = 10;
  std::vector<std::size_t> levels{1, 2, 3};
  std::uint64_t rhs_seed = 0;
  bool exact = false;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> report;
  std::vector<double> deltas{0.01, 0.1, 0.5};
};

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw UsageError(std::string("bad ") + what + " list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

}  // namespace detail

inline RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig cfg;
  CLI::App app{"al3: augmented Lagrangian preconditioning for block 3x3 systems"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string gamma_text, levels_text, q_text = "diag-mp", deltas_text;
  std::size_t level = 1;
  std::uint64_t seed = 0;
  std::string dir_text, out_text, report_text;
  double alpha = 0.0;

  auto* gen = app.add_subcommand("gen", "generate a test problem and write it as MatrixMarket files");
  auto* solve_cmd = app.add_subcommand("solve", "solve with FGMRES and the augmented Lagrangian preconditioner");
  auto* spectrum = app.add_subcommand("spectrum", "dense preconditioned spectrum (desk scale)");
  auto* bench = app.add_subcommand("bench", "sweep levels and gamma values");

  auto add_problem = [&](CLI::App* c, bool allow_dir) {
    auto* lv = c->add_option("--level", level, "refinement level (>= 1)");
    auto* sd = c->add_option("--seed", seed, "problem seed");
    c->add_option("--coarse", cfg.gen.coarse, "cells per side at level 1");
    c->add_option("--jump-lo", cfg.gen.jump_lo, "smallest coefficient");
    c->add_option("--jump-hi", cfg.gen.jump_hi, "largest coefficient");
    c->add_option("--coupling", cfg.gen.coupling_scale, "initial A12 scale");
    if (allow_dir) {
      auto* d = c->add_option("--dir", dir_text, "directory with a11/a12/a22/b/mp .mtx files");
      d->excludes(lv);
      d->excludes(sd);
    }
  };
  auto add_solver = [&](CLI::App* c) {
    c->add_option("--alpha", alpha, "alpha (default 2*gamma)");
    c->add_option("--tol", cfg.tol, "outer relative tolerance");
    c->add_option("--maxit", cfg.maxit, "outer iteration cap");
    c->add_option("--inner-tol", cfg.precond.inner_gmres_tol, "inner GMRES tolerance");
    c->add_option("--pcg-maxit", cfg.precond.pcg_maxit, "PCG iteration cap");
    c->add_option("--droptol-a22", cfg.precond.droptol_a22, "IC drop tolerance for A22");
    c->add_option("--droptol-s", cfg.precond.droptol_s, "IC drop tolerance for S");
    c->add_option("--q", q_text, "weight Q")->check(CLI::IsMember({"diag-mp", "identity"}));
  };

  add_problem(gen, false);
  gen->add_option("--out", out_text, "output directory")->required();

  add_problem(solve_cmd, true);
  add_solver(solve_cmd);
  solve_cmd->add_option("--gamma", gamma_text, "gamma (> 0)");
  solve_cmd->add_option("--rhs-seed", cfg.rhs_seed, "seed of the reference solution");
  solve_cmd->add_flag("--exact", cfg.exact, "apply the preconditioner with dense direct solves");
  solve_cmd->add_option("--out", out_text, "JSON report path");

  add_problem(spectrum, true);
  add_solver(spectrum);
  spectrum->add_option("--gamma", gamma_text, "gamma (> 0)");
  spectrum->add_option("--out", out_text, "eigenvalue CSV path")->required();
  spectrum->add_option("--report", report_text, "JSON report path (default: CSV path with .json)");
  spectrum->add_option("--deltas", deltas_text, "cluster radii, comma separated");

  add_problem(bench, false);
  add_solver(bench);
  bench->add_option("--gamma", gamma_text, "gamma list, comma separated");
  bench->add_option("--levels", levels_text, "level list, comma separated");
  bench->add_option("--reps", cfg.reps, "repetitions per cell");
  bench->add_option("--out", out_text, "CSV path");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    cfg.command = Command::help;
    cfg.help_text = app.help();
    return cfg;
  } catch (const CLI::CallForAllHelp&) {
    cfg.command = Command::help;
    cfg.help_text = app.help("", CLI::AppFormatMode::All);
    return cfg;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (gen->parsed()) cfg.command = Command::gen;
  if (solve_cmd->parsed()) cfg.command = Command::solve;
  if (spectrum->parsed()) cfg.command = Command::spectrum;
  if (bench->parsed()) cfg.command = Command::bench;

  cfg.gen.level = level;
  cfg.gen.seed = seed;
  if (!dir_text.empty()) cfg.dir = dir_text;
  if (!out_text.empty()) cfg.out = out_text;
  if (!report_text.empty()) cfg.report = report_text;
  if (!deltas_text.empty()) cfg.deltas = detail::parse_list<double>(deltas_text, "delta");
  cfg.precond.q_choice = q_text == "identity" ? QChoice::identity : QChoice::diag_mp;

  if (cfg.command == Command::bench) {
    cfg.gammas = gamma_text.empty() ? std::vector<double>{1, 10, 100, 1000} : detail::parse_list<double>(gamma_text, "gamma");
    if (!levels_text.empty()) cfg.levels = detail::parse_list<std::size_t>(levels_text, "level");
  } else if (!gamma_text.empty()) {
    cfg.gammas = detail::parse_list<double>(gamma_text, "gamma");
    if (cfg.gammas.size() != 1) throw UsageError("--gamma takes a single value here");
  }
  for (double g : cfg.gammas)
    if (!(g > 0.0)) throw UsageError("gamma must be positive");
  for (std::size_t l : cfg.levels)
    if (l < 1) throw UsageError("levels must be >= 1");

  bool alpha_given = false;
  for (const auto* c : {solve_cmd, spectrum, bench})
    if (c->parsed() && c->count("--alpha") > 0) alpha_given = true;
  if (alpha_given) {
    if (cfg.gammas.size() != 1) throw UsageError("--alpha needs a single --gamma");
    if (!(alpha >= cfg.gammas.front()))
      throw UsageError("alpha must satisfy alpha >= gamma (got alpha=" + std::to_string(alpha) +
                       ", gamma=" + std::to_string(cfg.gammas.front()) + ")");
    cfg.alpha = alpha;
  }
  cfg.precond.gamma = cfg.gammas.front();
  cfg.precond.alpha = cfg.alpha.value_or(2.0 * cfg.precond.gamma);

  if (!(cfg.tol > 0.0)) throw UsageError("--tol must be positive");
  if (cfg.maxit < 1) throw UsageError("--maxit must be >= 1");
  if (cfg.reps < 1) throw UsageError("--reps must be >= 1");
  try {
    cfg.precond.validate();
    cfg.gen.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

inline RunConfig parse_args(int argc, const char* const* argv) {
  return parse_args(std::vector<std::string>(argv + 1, argv + argc));
}

// ---------------------------------------------------------------------------

namespace detail {

inline BlockSystem load_problem(const RunConfig& cfg) {
  return cfg.dir ? load_block_system(*cfg.dir) : generate(cfg.gen);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

inline int run_gen(const RunConfig& cfg, std::ostream& out) {
  const auto gp = generate_with_info(cfg.gen);
  Manifest man;
  man["level"] = std::to_string(cfg.gen.level);
  man["seed"] = std::to_string(cfg.gen.seed);
  man["coarse"] = std::to_string(cfg.gen.coarse);
  man["cells_per_side"] = std::to_string(gp.info.cells_per_side);
  man["coupling_scale"] = std::to_string(gp.info.coupling_scale);
  man["halvings"] = std::to_string(gp.info.halvings);
  save_block_system(*cfg.out, gp.system, man);
  out << "wrote " << cfg.out->string() << ": n=" << gp.system.n() << " m=" << gp.system.m()
      << " p=" << gp.system.p() << " size=" << gp.system.size() << " coupling=" << gp.info.coupling_scale
      << " halvings=" << gp.info.halvings << '\n';
  return exit_code::ok;
}

inline int run_solve(const RunConfig& cfg, std::ostream& out) {
  const BlockSystem sys = load_problem(cfg);
  SolveOptions opt;
  opt.tol = cfg.tol;
  opt.maxit = cfg.maxit;
  opt.kind = cfg.exact ? PreconditionerKind::exact : PreconditionerKind::inexact;
  opt.reference = bench_reference(sys.size(), cfg.rhs_seed, 0);
  const Vector b = apply_block_system(sys, *opt.reference);
  const auto res = solve(sys, cfg.precond, b, opt);
  const auto& r = res.report;

  BenchRow row;
  row.level = cfg.dir ? 0 : cfg.gen.level;
  row.size = sys.size();
  row.gamma = cfg.precond.gamma;
  row.alpha = cfg.precond.alpha;
  row.iter = r.outer_iters;
  row.cpu = r.wall_seconds;
  row.err = *r.err;
  row.iter_in = r.iter_in;
  row.iter_pcg = r.iter_pcg;
  row.reps = 1;
  row.converged_reps = r.converged ? 1 : 0;
  write_bench_table(out, {row});
  out << "stop: " << to_string(r.stop_reason) << ", true relative residual " << r.true_relative_residual << '\n';

  if (cfg.out) {
    nlohmann::json j;
    j["size"] = sys.size();
    j["n"] = sys.n();
    j["m"] = sys.m();
    j["p"] = sys.p();
    j["gamma"] = cfg.precond.gamma;
    j["alpha"] = cfg.precond.alpha;
    j["outer_iters"] = r.outer_iters;
    j["wall_seconds"] = r.wall_seconds;
    j["err"] = *r.err;
    j["iter_in"] = r.iter_in;
    j["iter_pcg"] = r.iter_pcg;
    j["converged"] = r.converged;
    j["stop_reason"] = to_string(r.stop_reason);
    j["true_relative_residual"] = r.true_relative_residual;
    j["residual_history"] = r.residual_history;
    write_text(*cfg.out, j.dump(2) + "\n");
  }
  return r.converged ? exit_code::ok : exit_code::not_converged;
}

inline int run_spectrum(const RunConfig& cfg, std::ostream& out) {
  const BlockSystem sys = load_problem(cfg);
  const auto bounds = theorem_bounds(sys, cfg.precond);
  const auto spec = preconditioned_spectrum(sys, cfg.precond);
  const auto rep = verify_structure(sys, true);

  std::ostringstream csv;
  csv.precision(17);
  csv << "re,im\n";
  for (const auto& e : spec.eigenvalues) csv << e.real() << ',' << e.imag() << '\n';
  write_text(*cfg.out, csv.str());

  double min_re = std::numeric_limits<double>::infinity(), max_re = -min_re;
  for (const auto& e : spec.eigenvalues) {
    min_re = std::min(min_re, e.real());
    max_re = std::max(max_re, e.real());
  }
  const bool real_ok = spec.max_imag <= 1e-8 * spec.max_abs;
  const bool above_lower = min_re >= bounds.lower - 1e-10;
  const bool below_upper = max_re < bounds.upper;

  nlohmann::json j;
  j["size"] = sys.size();
  j["gamma"] = cfg.precond.gamma;
  j["alpha"] = cfg.precond.alpha;
  j["min_re"] = min_re;
  j["max_re"] = max_re;
  j["max_imag"] = spec.max_imag;
  j["max_abs"] = spec.max_abs;
  j["lower_bound"] = bounds.lower;
  j["upper_bound"] = bounds.upper;
  j["kernel_trivial"] = bounds.kernel_trivial;
  j["real"] = real_ok;
  j["above_lower"] = above_lower;
  j["below_upper"] = below_upper;
  if (rep.dominance_margin) j["dominance_margin"] = *rep.dominance_margin;
  nlohmann::json cl = nlohmann::json::array();
  for (const auto& row : cluster_stats(spec, cfg.deltas)) cl.push_back({{"delta", row.delta}, {"fraction", row.fraction}});
  j["cluster"] = cl;
  std::filesystem::path report = cfg.report ? *cfg.report : std::filesystem::path(*cfg.out).replace_extension(".json");
  write_text(report, j.dump(2) + "\n");

  out << "size " << sys.size() << ", gamma " << cfg.precond.gamma << ", alpha " << cfg.precond.alpha << '\n'
      << "Re(lambda) in [" << min_re << ", " << max_re << "], max |Im| " << spec.max_imag << '\n'
      << "bounds [" << bounds.lower << ", " << bounds.upper << ")"
      << (bounds.kernel_trivial ? "" : " (Ker(B) nontrivial: lower bound reported only)") << '\n';
  for (const auto& row : cluster_stats(spec, cfg.deltas))
    out << "fraction within " << row.delta << " of 1: " << row.fraction << '\n';
  out << "wrote " << cfg.out->string() << " and " << report.string() << '\n';
  return exit_code::ok;
}

inline int run_bench_command(const RunConfig& cfg, std::ostream& out) {
  BenchConfig bc;
  bc.levels = cfg.levels;
  bc.gammas = cfg.gammas;
  bc.alpha_ratio = cfg.alpha ? *cfg.alpha / cfg.gammas.front() : 2.0;
  bc.reps = cfg.reps;
  bc.seed = cfg.gen.seed;
  bc.gen = cfg.gen;
  bc.precond = cfg.precond;
  bc.tol = cfg.tol;
  bc.maxit = cfg.maxit;
  const auto rows = run_bench(bc);
  write_bench_table(out, rows);
  if (cfg.out) {
    std::ostringstream csv;
    write_bench_csv(csv, rows);
    write_text(*cfg.out, csv.str());
  }
  return all_converged(rows) ? exit_code::ok : exit_code::not_converged;
}

}  // namespace detail

/// Executes a parsed configuration. Library errors propagate.
inline int run(const RunConfig& cfg, std::ostream& out) {
  switch (cfg.command) {
    case Command::gen: return detail::run_gen(cfg, out);
    case Command::solve: return detail::run_solve(cfg, out);
    case Command::spectrum: return detail::run_spectrum(cfg, out);
    case Command::bench: return detail::run_bench_command(cfg, out);
    case Command::help: out << cfg.help_text; return exit_code::ok;
  }
  return exit_code::usage;
}

/// parse_args + run with errors mapped to exit codes.
inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for options\n";
    return exit_code::usage;
  }
  try {
    return run(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
}

}  // namespace al3
