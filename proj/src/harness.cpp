#include "noisy_stm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "noisy_stm/rng.hpp"

namespace noisy_stm {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kColumns = 12;

double opt(const std::optional<double>& v) { return v ? *v : kNaN; }

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string run_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03d.csv", i);
  return buf;
}

std::string value_dir(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "value_%03zu", i);
  return buf;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<CsvRow> trace_rows(const Trace& trace, const BoundExperiment& exp) {
  const SmoothProblem& p = exp.problem;
  std::optional<BoundCurve> bounds;
  const auto delta = absolute_delta(exp.oracle);
  const bool applies = trace.algorithm == "stm" && trace.restart_indices.empty() &&
                       !exp.solver.restart && delta && p.x_star && !trace.records.empty();
  if (applies) {
    const Vector x0 = exp.solver.x_start.value_or(Vector::Zero(p.dim));
    const double R = (x0 - *p.x_star).norm();
    const auto ic = inexactness_constants(*delta, p.L_f, p.mu);
    const auto rt = r_tilde_column(trace);
    if (!rt.empty()) {
      bounds = theoretical_bounds(trace.L, p.mu, R, ic.delta1, ic.delta2, ic.delta3, rt,
                                  static_cast<int>(trace.records.size()) - 1);
    }
  }
  std::vector<CsvRow> rows;
  rows.reserve(trace.records.size());
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const IterRecord& r = trace.records[i];
    CsvRow row{static_cast<double>(r.k), opt(r.f_gap), r.grad_norm, opt(r.dist_to_opt), r.A_k,
               r.alpha_k, r.noise_norm, opt(r.psi_min), r.adaptive_term, kNaN, kNaN, kNaN};
    if (bounds) {
      if (bounds->tau1) row[9] = (*bounds->tau1)[i];
      if (bounds->tau2) row[10] = (*bounds->tau2)[i];
      row[11] = bounds->mu0[i];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CsvRow> mean_rows(const std::vector<std::vector<CsvRow>>& runs) {
  std::size_t n = 0;
  for (const auto& r : runs) n = std::max(n, r.size());
  std::vector<CsvRow> out(n, CsvRow(kColumns, kNaN));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kColumns; ++c) {
      double sum = 0.0;
      int count = 0;
      for (const auto& run : runs) {
        if (i < run.size() && !std::isnan(run[i][c])) {
          sum += run[i][c];
          ++count;
        }
      }
      if (count) out[i][c] = sum / count;
    }
    out[i][0] = static_cast<double>(i);
  }
  // iteration numbers come from the runs when all agree
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& run : runs) {
      if (i < run.size()) {
        out[i][0] = run[i][0];
        break;
      }
    }
  }
  return out;
}

std::string csv_text(const std::vector<CsvRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      if (c == 0) {
        out += std::to_string(static_cast<long long>(row[0]));
      } else if (!std::isnan(row[c])) {
        out += format_double(row[c]);
      }
    }
    out += '\n';
  }
  return out;
}

int worker_count() {
  const char* env = std::getenv("NOISY_STM_THREADS");
  if (env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 0) return static_cast<int>(std::min<long>(v, 256));
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  if (n <= 0) return;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int count = std::min(workers, n);
    for (int w = 0; w < count; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            job(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<Trace> run_repetitions(const ExperimentConfig& config, const BoundExperiment& exp,
                                   std::uint64_t axis_index) {
  std::vector<Trace> traces(static_cast<std::size_t>(config.repetitions));
  parallel_for(config.repetitions, worker_count(), [&](int i) {
    SolverConfig s = exp.solver;
    s.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i), axis_index);
    Rng rng(s.seed);
    traces[i] = solve(exp.problem, exp.oracle, s, rng);
  });
  return traces;
}

RunSummary run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                          std::uint64_t axis_index) {
  ensure_writable(out_dir);
  const BoundExperiment exp = bind(config);
  const int reps = config.repetitions;
  RunSummary summary;
  summary.traces = run_repetitions(config, exp, axis_index);

  std::vector<std::vector<CsvRow>> all;
  std::ostringstream text;
  for (int i = 0; i < reps; ++i) {
    const Trace& t = summary.traces[i];
    all.push_back(trace_rows(t, exp));
    const fs::path file = out_dir / run_name(i);
    write_file(file, csv_text(all.back()));
    summary.files.push_back(file);
    text << "rep " << i << ": " << t.algorithm << " records=" << t.records.size();
    if (!t.records.empty()) {
      const auto& last = t.records.back();
      text << " final_k=" << last.k;
      if (last.f_gap) text << " final_gap=" << format_double(*last.f_gap);
    }
    if (t.stopped_at) text << " stopped_at=" << *t.stopped_at;
    if (!t.restart_indices.empty()) text << " restarts=" << t.restart_indices.size();
    if (t.stalled) text << " stalled";
    if (t.aborted) text << " aborted(" << t.abort_reason << ")";
    text << "\n";
  }
  const fs::path mean = out_dir / "mean.csv";
  write_file(mean, csv_text(mean_rows(all)));
  summary.files.push_back(mean);
  summary.text = text.str();
  return summary;
}

SweepSummary sweep(const ExperimentConfig& config, const SweepSpec& axis, const fs::path& out_dir) {
  if (axis.param.empty()) throw ConfigError("sweep: no parameter given");
  if (axis.values.empty()) throw ConfigError("sweep: empty value list");
  for (double v : axis.values) {
    if (!std::isfinite(v)) throw ConfigError("sweep: non-finite axis value");
  }
  ensure_writable(out_dir);
  // validate every point before running any of them
  std::vector<ExperimentConfig> points;
  for (double v : axis.values) {
    ExperimentConfig c = config;
    c.sweep.reset();
    set_param(c, axis.param, format_double(v));
    points.push_back(std::move(c));
  }
  SweepSummary out;
  std::vector<std::vector<double>> columns;
  for (std::size_t a = 0; a < points.size(); ++a) {
    RunSummary rs = run_experiment(points[a], out_dir / value_dir(a), a);
    // re-read the mean gap from the traces
    std::vector<std::vector<CsvRow>> all;
    const BoundExperiment exp = bind(points[a]);
    for (const auto& t : rs.traces) all.push_back(trace_rows(t, exp));
    const auto mean = mean_rows(all);
    std::vector<double> col;
    for (const auto& row : mean) col.push_back(row[1]);
    columns.push_back(std::move(col));
    out.per_value.push_back(std::move(rs));
  }
  std::size_t n = 0;
  for (const auto& c : columns) n = std::max(n, c.size());
  std::string table = "iter";
  for (double v : axis.values) table += "," + axis.param + "=" + format_double(v);
  table += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    table += std::to_string(i);
    for (const auto& c : columns) {
      table += ',';
      if (i < c.size() && !std::isnan(c[i])) table += format_double(c[i]);
    }
    table += '\n';
  }
  out.table = out_dir / "sweep.csv";
  write_file(out.table, table);
  return out;
}

ThresholdResult threshold_search(const ExperimentConfig& config, const ThresholdOptions& opts) {
  if (opts.n_probe < 1) throw ConfigError("threshold: n_probe must be >= 1");
  if (!(opts.factor > 0.0)) throw ConfigError("threshold: factor must be > 0");
  if (opts.bisections < 1) throw ConfigError("threshold: need at least one bisection");
  if (config.noise.mode != "sphere_uniform" && config.noise.mode != "shrink") {
    throw ConfigError("threshold: noise.mode must be sphere_uniform or shrink");
  }
  ExperimentConfig base = config;
  base.iterations = opts.n_probe;
  base.stopping.reset();
  base.sweep.reset();
  base.noise = NoiseSpec{};
  const BoundExperiment clean = bind(base);
  if (!clean.problem.f_star) throw ConfigError("threshold: f* must be known");

  auto gap_at = [&](const Trace& t) -> std::optional<double> {
    if (t.records.size() <= static_cast<std::size_t>(opts.n_probe)) return std::nullopt;
    const auto& g = t.records[opts.n_probe].f_gap;
    if (!g || !std::isfinite(*g)) return std::nullopt;
    return g;
  };

  const int reps = config.repetitions;
  ThresholdResult res;
  res.lo.assign(reps, 0.0);
  res.hi.assign(reps, 1.0);
  res.alpha.assign(reps, 0.5);
  parallel_for(reps, worker_count(), [&](int r) {
    SolverConfig s = clean.solver;
    s.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r), 0);
    Rng rng0(s.seed);
    const auto g0 = gap_at(solve(clean.problem, clean.oracle, s, rng0));
    if (!g0 || !(*g0 > 0.0)) {
      throw ConfigError("threshold: success predicate fails at alpha = 0");
    }
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < opts.bisections; ++it) {
      const double mid = 0.5 * (lo + hi);
      RelativeNoise rn;
      rn.alpha = mid;
      rn.mode = config.noise.mode == "shrink" ? RelativeNoise::Mode::shrink
                                              : RelativeNoise::Mode::sphere_uniform;
      const GradientOracle oracle = GradientOracle::with_noise(rn);
      Rng rng(s.seed);
      const auto g = gap_at(solve(clean.problem, oracle, s, rng));
      if (g && *g < opts.factor * *g0) lo = mid;
      else hi = mid;
    }
    res.lo[r] = lo;
    res.hi[r] = hi;
    res.alpha[r] = 0.5 * (lo + hi);
  });
  res.min = *std::min_element(res.alpha.begin(), res.alpha.end());
  res.max = *std::max_element(res.alpha.begin(), res.alpha.end());
  res.median = median_of(res.alpha);
  std::ostringstream text;
  for (int r = 0; r < reps; ++r) {
    text << "seed " << r << ": alpha* in [" << format_double(res.lo[r]) << ", "
         << format_double(res.hi[r]) << "]\n";
  }
  text << "alpha* min=" << format_double(res.min) << " median=" << format_double(res.median)
       << " max=" << format_double(res.max) << "\n";
  res.text = text.str();
  return res;
}

}  // namespace noisy_stm
