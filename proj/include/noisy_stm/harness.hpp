#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "noisy_stm/config.hpp"
#include "noisy_stm/solvers.hpp"

namespace noisy_stm {

/// Column order of every CSV the harness writes.
inline constexpr const char* kCsvHeader =
    "iter,f_gap,grad_norm,dist_to_opt,A_k,alpha_k,noise_norm,psi_min,adaptive_term,"
    "bound_tau1,bound_tau2,bound_mu0";

/// One CSV row; NaN marks an absent field.
using CsvRow = std::vector<double>;

/// Rows for a trace, with the bound columns filled when they apply.
std::vector<CsvRow> trace_rows(const Trace& trace, const BoundExperiment& exp);

/// Column-wise mean over runs; a field is averaged over the runs that have it.
std::vector<CsvRow> mean_rows(const std::vector<std::vector<CsvRow>>& runs);

std::string csv_text(const std::vector<CsvRow>& rows);

/// Worker count from NOISY_STM_THREADS (unset: hardware threads, 0: serial).
int worker_count();

/// Calls job(i) for i in [0, n) on up to `workers` threads. Exceptions are
/// rethrown on the caller, lowest index first.
void parallel_for(int n, int workers, const std::function<void(int)>& job);

/// Solves every repetition in memory, seeds as in run_experiment.
std::vector<Trace> run_repetitions(const ExperimentConfig& config, const BoundExperiment& exp,
                                   std::uint64_t axis_index = 0);

struct RunSummary {
  std::vector<Trace> traces;
  std::vector<std::filesystem::path> files;   // run_XXX.csv then mean.csv
  std::string text;                           // one line per repetition
};

/// Runs every repetition with seed derive_seed(config.seed, rep, axis_index)
/// and writes run_XXX.csv plus mean.csv into `out_dir`. The directory is
/// checked for writability before any solver work.
RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                          std::uint64_t axis_index = 0);

struct SweepSummary {
  std::vector<RunSummary> per_value;
  std::filesystem::path table;   // iter x value of the mean f_gap
};

/// One run_experiment per axis value in out_dir/value_XXX, then a wide table.
SweepSummary sweep(const ExperimentConfig& config, const SweepSpec& axis,
                   const std::filesystem::path& out_dir);

struct ThresholdOptions {
  int n_probe = 500;
  double factor = 10.0;     // success: gap(N_probe) < factor * noiseless gap
  int bisections = 12;
};

struct ThresholdResult {
  std::vector<double> lo, hi;   // per seed, final bracket
  std::vector<double> alpha;    // per seed, bracket midpoint
  double min = 0.0, median = 0.0, max = 0.0;
  std::string text;
};

/// Bisection over the relative noise level alpha in (0, 1), once per
/// repetition seed. The noise mode comes from config.noise.mode.
ThresholdResult threshold_search(const ExperimentConfig& config, const ThresholdOptions& opts);

struct VerifyEntry {
  std::string scope;
  std::string name;
  bool passed = false;
  double worst = 0.0;     // worst relative slack or error seen
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;
  bool all_passed() const;
  std::string text() const;
};

/// Runs the invariant suites of one module ("all" for every module).
/// poison = "recurrence" corrupts alpha to exercise the failure path.
VerifyReport verify(const std::string& scope, const std::string& poison = "");

}  // namespace noisy_stm
