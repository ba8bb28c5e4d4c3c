#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "noisy_stm/core.hpp"
#include "noisy_stm/oracles.hpp"
#include "noisy_stm/problems.hpp"

namespace noisy_stm {

struct NoiseSpec {
  enum class Kind { none, absolute, relative, central_fd, sphere, gaussian };
  Kind kind = Kind::none;
  double delta = 0.0;                 // absolute
  double alpha = 0.0;                 // relative
  std::string mode = "sphere_uniform";  // sphere_uniform | fixed_bias | shrink
  Vector bias;                        // fixed_bias
  double h = 1e-4;                    // zeroth order step
  int samples = 1;
  double value_noise = 0.0;
};

struct SetSpec {
  enum class Kind { whole, box, ball };
  Kind kind = Kind::whole;
  Vector lo, hi, center;
  double radius = 1.0;
};

struct StoppingSpec {
  StoppingVariant variant = StoppingVariant::theorem;
  double eps = 1e-3;
  std::optional<double> R;   // defaults to ||x_start - x*||
};

struct SweepSpec {
  std::string param;   // "section.key", e.g. noise.delta
  std::vector<double> values;
};

/// Everything needed to reproduce one experiment.
struct ExperimentConfig {
  ProblemSpec problem;
  Algorithm algorithm = Algorithm::stm;
  int tau = 1;
  int iterations = 1000;
  std::uint64_t seed = 1;
  int repetitions = 1;
  std::string output = "out";
  std::optional<double> step;
  std::optional<Vector> x_start;
  SetSpec set;
  std::optional<RestartSchedule> restart;
  NoiseSpec noise;
  std::optional<StoppingSpec> stopping;
  std::optional<SweepSpec> sweep;
};

/// Parses the sectioned key-value format. Unknown sections or keys,
/// duplicates and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes every key in a fixed order with shortest round-trip digits, so
/// parse(serialize(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// Applies one "section.key = value" assignment with the parser's rules.
void set_param(ExperimentConfig& config, const std::string& dotted_key, const std::string& value);

/// All accepted "section.key" names.
const std::vector<std::string>& config_keys();

std::string format_double(double v);
Vector parse_vector(const std::string& text);
Matrix parse_matrix(const std::string& text);

GradientOracle make_oracle(const NoiseSpec& spec, Eigen::Index dim);
FeasibleSet make_set(const SetSpec& spec);

/// Problem, oracle and solver config bound together.
struct BoundExperiment {
  SmoothProblem problem;
  GradientOracle oracle;
  SolverConfig solver;
};

BoundExperiment bind(const ExperimentConfig& config);

}  // namespace noisy_stm
