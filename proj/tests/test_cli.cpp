#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "al3/cli.hpp"

using namespace al3;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("al3_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(AL3_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

}  // namespace

TEST(ParseArgs, SolveDefaultsAlphaToTwiceGamma) {
  const auto cfg = parse_args({"solve", "--gamma", "10", "--dir", "prob/"});
  EXPECT_EQ(cfg.command, Command::solve);
  EXPECT_EQ(cfg.precond.gamma, 10.0);
  EXPECT_EQ(cfg.precond.alpha, 20.0);
  EXPECT_EQ(cfg.dir->string(), "prob/");
  const PrecondParams defaults;
  EXPECT_EQ(cfg.precond.droptol_a22, defaults.droptol_a22);
  EXPECT_EQ(cfg.precond.droptol_s, defaults.droptol_s);
  EXPECT_EQ(cfg.precond.inner_gmres_tol, defaults.inner_gmres_tol);
  EXPECT_EQ(cfg.precond.pcg_maxit, defaults.pcg_maxit);
  EXPECT_EQ(cfg.tol, 1e-7);
}

TEST(ParseArgs, BenchSweepConfig) {
  const auto cfg = parse_args({"bench", "--gamma", "1,10", "--levels", "1,2", "--reps", "10"});
  EXPECT_EQ(cfg.command, Command::bench);
  EXPECT_EQ(cfg.gammas, (std::vector<double>{1, 10}));
  EXPECT_EQ(cfg.levels, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(cfg.reps, 10u);
  EXPECT_EQ(cfg.gammas.size() * cfg.levels.size(), 4u);
}

TEST(ParseArgs, BenchDefaults) {
  const auto cfg = parse_args({"bench"});
  EXPECT_EQ(cfg.reps, 10u);
  EXPECT_EQ(cfg.gammas, (std::vector<double>{1, 10, 100, 1000}));
}

TEST(ParseArgs, Rejections) {
  EXPECT_THROW(parse_args({"solve", "--gamma", "10", "--alpha", "5"}), UsageError);
  EXPECT_THROW(parse_args({"solve", "--dir", "x", "--level", "2"}), UsageError);
  EXPECT_THROW(parse_args({"solve", "--dir", "x", "--seed", "2"}), UsageError);
  EXPECT_THROW(parse_args({"solve", "--frobnicate"}), UsageError);
  EXPECT_THROW(parse_args({}), UsageError);
  EXPECT_THROW(parse_args({"solve", "--tol", "0"}), UsageError);
  EXPECT_THROW(parse_args({"solve", "--gamma", "1,2"}), UsageError);
  EXPECT_THROW(parse_args({"bench", "--reps", "0"}), UsageError);
  EXPECT_THROW(parse_args({"bench", "--gamma", "1,x"}), UsageError);
  EXPECT_THROW(parse_args({"bench", "--gamma", "1,10", "--alpha", "20"}), UsageError);
  EXPECT_THROW(parse_args({"solve", "--q", "dense"}), UsageError);
  EXPECT_THROW(parse_args({"gen", "--level", "1"}), UsageError);  // --out required
}

TEST(ParseArgs, QChoiceAndInnerOverrides) {
  const auto cfg = parse_args({"solve", "--q", "identity", "--inner-tol", "1e-3", "--pcg-maxit", "7",
                               "--droptol-a22", "1e-4", "--droptol-s", "0", "--maxit", "50"});
  EXPECT_EQ(cfg.precond.q_choice, QChoice::identity);
  EXPECT_EQ(cfg.precond.inner_gmres_tol, 1e-3);
  EXPECT_EQ(cfg.precond.pcg_maxit, 7u);
  EXPECT_EQ(cfg.precond.droptol_a22, 1e-4);
  EXPECT_EQ(cfg.precond.droptol_s, 0.0);
  EXPECT_EQ(cfg.maxit, 50u);
}

TEST(ParseArgs, HelpIsNotAnError) {
  const auto cfg = parse_args({"--help"});
  EXPECT_EQ(cfg.command, Command::help);
  EXPECT_NE(cfg.help_text.find("bench"), std::string::npos);
}

TEST(Bench, DeterministicAndTableMatchesCsv) {
  BenchConfig bc;
  bc.levels = {1};
  bc.gammas = {1, 100};
  bc.reps = 1;
  bc.gen.coarse = 3;
  bc.threads = 2;
  const auto a = run_bench(bc);
  const auto b = run_bench(bc);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].iter, b[i].iter);
    EXPECT_EQ(a[i].err, b[i].err);
    EXPECT_EQ(a[i].iter_in, b[i].iter_in);
    EXPECT_TRUE(a[i].converged());
  }

  std::ostringstream table, csv;
  write_bench_table(table, a);
  write_bench_csv(csv, a);
  std::istringstream ts(table.str()), cs(csv.str());
  for (std::string tl, cl; std::getline(ts, tl) && std::getline(cs, cl);) {
    std::vector<std::string> fields;
    std::stringstream ss(cl);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    EXPECT_EQ(split_ws(tl), fields);
  }
}

TEST(Bench, LooseToleranceTakesAtMostOneIteration) {
  BenchConfig bc;
  bc.levels = {1, 2};
  bc.gen.coarse = 3;
  bc.reps = 1;
  bc.tol = 1.0;
  for (const auto& row : run_bench(bc)) EXPECT_LE(row.iter, 1u);
}

TEST(Bench, NonConvergedRowsFlagged) {
  BenchConfig bc;
  bc.levels = {1};
  bc.gammas = {1};
  bc.gen.coarse = 3;
  bc.reps = 2;
  bc.maxit = 1;
  const auto rows = run_bench(bc);
  EXPECT_FALSE(rows[0].converged());
  EXPECT_FALSE(all_converged(rows));
  EXPECT_EQ(bench_fields(rows[0]).back(), "NO(0/2)");
}

TEST(CliBinary, ExitCodes) {
  EXPECT_EQ(run_binary(""), exit_code::usage);
  EXPECT_EQ(run_binary("solve --bogus"), exit_code::usage);
  EXPECT_EQ(run_binary("solve --gamma 10 --alpha 5"), exit_code::usage);
  EXPECT_EQ(run_binary("solve --coarse 3 --gamma 10"), exit_code::ok);
  EXPECT_EQ(run_binary("solve --coarse 3 --gamma 10 --maxit 1"), exit_code::not_converged);
  EXPECT_EQ(run_binary("solve --dir /nonexistent/al3"), exit_code::failure);
  EXPECT_EQ(run_binary("--help"), exit_code::ok);
}

TEST(CliBinary, GenThenSolveFromDirectory) {
  const auto dir = scratch("gen");
  ASSERT_EQ(run_binary("gen --coarse 3 --seed 4 --out " + dir.string()), exit_code::ok);
  for (const char* f : {"a11.mtx", "a12.mtx", "a22.mtx", "b.mtx", "mp.mtx", "manifest.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  GenSpec s;
  s.coarse = 3;
  s.seed = 4;
  EXPECT_TRUE(load_block_system(dir) == generate(s));

  const auto report = dir / "solve.json";
  ASSERT_EQ(run_binary("solve --dir " + dir.string() + " --gamma 10 --out " + report.string()), exit_code::ok);
  const auto j = nlohmann::json::parse(slurp(report));
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_EQ(j["gamma"].get<double>(), 10.0);
  EXPECT_EQ(j["alpha"].get<double>(), 20.0);
  EXPECT_LE(j["true_relative_residual"].get<double>(), 1e-7);
  fs::remove_all(dir);
}

TEST(CliBinary, SpectrumWritesCsvAndReport) {
  const auto dir = scratch("spectrum");
  fs::create_directories(dir);
  const auto csv = dir / "eig.csv";
  ASSERT_EQ(run_binary("spectrum --coarse 3 --gamma 10 --alpha 20 --out " + csv.string()), exit_code::ok);
  std::istringstream lines(slurp(csv));
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "re,im");
  std::size_t count = 0;
  for (std::string l; std::getline(lines, l);) ++count;
  GenSpec s;
  s.coarse = 3;
  EXPECT_EQ(count, s.total_size());
  const auto j = nlohmann::json::parse(slurp(dir / "eig.json"));
  EXPECT_TRUE(j["real"].get<bool>());
  EXPECT_TRUE(j["below_upper"].get<bool>());
  EXPECT_GT(j["min_re"].get<double>(), 0.0);
  EXPECT_EQ(j["cluster"].size(), 3u);
  fs::remove_all(dir);
}

TEST(CliBinary, BenchWritesCsv) {
  const auto dir = scratch("bench");
  const auto csv = dir / "bench.csv";
  ASSERT_EQ(run_binary("bench --coarse 3 --levels 1,2 --gamma 1,1000 --reps 1 --out " + csv.string()),
            exit_code::ok);
  std::istringstream lines(slurp(csv));
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "level,size,gamma,alpha,iter,cpu,err,iter_in,iter_pcg,converged");
  std::size_t rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  EXPECT_EQ(rows, 4u);
  fs::remove_all(dir);
}

TEST(Threads, EnvironmentOverride) {
  ::setenv("AL3_THREADS", "3", 1);
  EXPECT_EQ(thread_budget(), 3u);
  ::setenv("AL3_THREADS", "zero", 1);
  EXPECT_THROW(thread_budget(), InvalidInput);
  ::unsetenv("AL3_THREADS");
  EXPECT_GE(thread_budget(), 1u);
}

TEST(Threads, ParallelForVisitsEveryIndexAndRethrows) {
  std::vector<int> hits(50, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw InvalidInput("boom"); }, 3), InvalidInput);
}
