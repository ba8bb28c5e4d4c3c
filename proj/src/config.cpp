#include "noisy_stm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace noisy_stm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a finite number, got '" + raw + "'");
  }
  return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  Int v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  }
  return v;
}

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += "; ";
    out += format_vector(m.row(r).transpose());
  }
  return out;
}

const char* noise_kind_name(NoiseSpec::Kind k) {
  switch (k) {
    case NoiseSpec::Kind::none: return "none";
    case NoiseSpec::Kind::absolute: return "absolute";
    case NoiseSpec::Kind::relative: return "relative";
    case NoiseSpec::Kind::central_fd: return "central_fd";
    case NoiseSpec::Kind::sphere: return "sphere";
    case NoiseSpec::Kind::gaussian: return "gaussian";
  }
  return "?";
}

NoiseSpec::Kind noise_kind_from(const std::string& s) {
  for (auto k : {NoiseSpec::Kind::none, NoiseSpec::Kind::absolute, NoiseSpec::Kind::relative,
                 NoiseSpec::Kind::central_fd, NoiseSpec::Kind::sphere, NoiseSpec::Kind::gaussian}) {
    if (s == noise_kind_name(k)) return k;
  }
  throw ConfigError("noise.model: unknown model '" + s + "'");
}

const char* set_kind_name(SetSpec::Kind k) {
  switch (k) {
    case SetSpec::Kind::whole: return "whole";
    case SetSpec::Kind::box: return "box";
    case SetSpec::Kind::ball: return "ball";
  }
  return "?";
}

StoppingSpec& stopping_of(ExperimentConfig& c) {
  if (!c.stopping) c.stopping.emplace();
  return *c.stopping;
}

RestartSchedule& restart_of(ExperimentConfig& c, const std::string& key) {
  if (!c.restart) throw ConfigError(key + " needs solver.restart = fixed or halving first");
  return *c.restart;
}

SweepSpec& sweep_of(ExperimentConfig& c) {
  if (!c.sweep) c.sweep.emplace();
  return *c.sweep;
}

}  // namespace

std::string format_double(double v) {
  // shortest text that parses back to the same double
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Vector parse_vector(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) vals.push_back(parse_double("vector", tok));
  Vector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

Matrix parse_matrix(const std::string& text) {
  std::vector<Vector> rows;
  std::stringstream in(text);
  std::string row;
  while (std::getline(in, row, ';')) {
    if (trim(row).empty()) continue;
    rows.push_back(parse_vector(row));
  }
  if (rows.empty()) return Matrix();
  const Eigen::Index cols = rows[0].size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ConfigError("matrix rows differ in length");
    m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return m;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "problem.family", "problem.n", "problem.k", "problem.L", "problem.mu", "problem.chi",
      "problem.lambda", "problem.A", "problem.b",
      "solver.algorithm", "solver.tau", "solver.iterations", "solver.seed", "solver.repetitions",
      "solver.output", "solver.step", "solver.x_start", "solver.set", "solver.set_lo",
      "solver.set_hi", "solver.set_center", "solver.set_radius", "solver.restart",
      "solver.restart_period", "solver.max_restarts",
      "noise.model", "noise.delta", "noise.alpha", "noise.mode", "noise.bias", "noise.h",
      "noise.samples", "noise.value_noise",
      "stopping.variant", "stopping.eps", "stopping.R",
      "sweep.param", "sweep.values"};
  return keys;
}

void set_param(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto num = [&] { return parse_double(key, v); };
  auto count = [&] {
    const long long n = parse_int<long long>(key, v);
    if (n < 0 || n > 2'000'000'000LL) throw ConfigError(key + ": out of range");
    return n;
  };
  ProblemSpec& p = c.problem;
  if (key == "problem.family") p.family = problem_family_from_string(v);
  else if (key == "problem.n") p.n = count();
  else if (key == "problem.k") p.k = count();
  else if (key == "problem.L") p.L = num();
  else if (key == "problem.mu") p.mu = num();
  else if (key == "problem.chi") p.chi = num();
  else if (key == "problem.lambda") p.lambda = parse_vector(v);
  else if (key == "problem.A") p.A = parse_matrix(v);
  else if (key == "problem.b") p.b = parse_vector(v);
  else if (key == "solver.algorithm") c.algorithm = algorithm_from_string(v);
  else if (key == "solver.tau") c.tau = static_cast<int>(count());
  else if (key == "solver.iterations") c.iterations = static_cast<int>(count());
  else if (key == "solver.seed") c.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "solver.repetitions") c.repetitions = static_cast<int>(count());
  else if (key == "solver.output") c.output = v;
  else if (key == "solver.step") c.step = num();
  else if (key == "solver.x_start") c.x_start = parse_vector(v);
  else if (key == "solver.set") {
    if (v == "whole") c.set.kind = SetSpec::Kind::whole;
    else if (v == "box") c.set.kind = SetSpec::Kind::box;
    else if (v == "ball") c.set.kind = SetSpec::Kind::ball;
    else throw ConfigError("solver.set: expected whole, box or ball");
  }
  else if (key == "solver.set_lo") c.set.lo = parse_vector(v);
  else if (key == "solver.set_hi") c.set.hi = parse_vector(v);
  else if (key == "solver.set_center") c.set.center = parse_vector(v);
  else if (key == "solver.set_radius") c.set.radius = num();
  else if (key == "solver.restart") {
    if (v == "none") c.restart.reset();
    else if (v == "fixed") { if (!c.restart) c.restart.emplace(); c.restart->kind = RestartSchedule::Kind::fixed_period; }
    else if (v == "halving") { if (!c.restart) c.restart.emplace(); c.restart->kind = RestartSchedule::Kind::halving; }
    else throw ConfigError("solver.restart: expected none, fixed or halving");
  }
  else if (key == "solver.restart_period") restart_of(c, key).period = static_cast<int>(count());
  else if (key == "solver.max_restarts") restart_of(c, key).max_restarts = static_cast<int>(count());
  else if (key == "noise.model") c.noise.kind = noise_kind_from(v);
  else if (key == "noise.delta") c.noise.delta = num();
  else if (key == "noise.alpha") c.noise.alpha = num();
  else if (key == "noise.mode") {
    if (v != "sphere_uniform" && v != "fixed_bias" && v != "shrink") {
      throw ConfigError("noise.mode: expected sphere_uniform, fixed_bias or shrink");
    }
    c.noise.mode = v;
  }
  else if (key == "noise.bias") c.noise.bias = parse_vector(v);
  else if (key == "noise.h") c.noise.h = num();
  else if (key == "noise.samples") c.noise.samples = static_cast<int>(count());
  else if (key == "noise.value_noise") c.noise.value_noise = num();
  else if (key == "stopping.variant") {
    if (v == "theorem") stopping_of(c).variant = StoppingVariant::theorem;
    else if (v == "adaptive") stopping_of(c).variant = StoppingVariant::adaptive;
    else throw ConfigError("stopping.variant: expected theorem or adaptive");
  }
  else if (key == "stopping.eps") stopping_of(c).eps = num();
  else if (key == "stopping.R") stopping_of(c).R = num();
  else if (key == "sweep.param") {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), v) == keys.end() || v.rfind("sweep.", 0) == 0) {
      throw ConfigError("sweep.param: unknown parameter '" + v + "'");
    }
    sweep_of(c).param = v;
  }
  else if (key == "sweep.values") {
    const Vector vals = parse_vector(v);
    sweep_of(c).values.assign(vals.data(), vals.data() + vals.size());
  }
  else throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::map<std::string, std::string> entries;
  bool has_stopping = false;
  for (const auto& [section, body] : tree) {
    if (section != "problem" && section != "solver" && section != "noise" &&
        section != "stopping" && section != "sweep") {
      throw ConfigError("config: unknown section [" + section + "]");
    }
    if (section == "stopping") has_stopping = true;
    if (!body.data().empty()) throw ConfigError("config: key outside of a section");
    for (const auto& [key, value] : body) entries[section + "." + key] = value.data();
  }
  for (const auto& [key, value] : entries) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  ExperimentConfig c;
  if (has_stopping) c.stopping.emplace();
  // canonical order, so restart kind precedes its parameters
  for (const auto& key : config_keys()) {
    if (auto it = entries.find(key); it != entries.end()) set_param(c, key, it->second);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const ProblemSpec& p = c.problem;
  o << "[problem]\n";
  o << "family = " << to_string(p.family) << "\n";
  o << "n = " << p.n << "\n";
  if (p.k) o << "k = " << *p.k << "\n";
  o << "L = " << format_double(p.L) << "\n";
  o << "mu = " << format_double(p.mu) << "\n";
  o << "chi = " << format_double(p.chi) << "\n";
  if (p.lambda.size()) o << "lambda = " << format_vector(p.lambda) << "\n";
  if (p.A.size()) o << "A = " << format_matrix(p.A) << "\n";
  if (p.b.size()) o << "b = " << format_vector(p.b) << "\n";

  o << "\n[solver]\n";
  o << "algorithm = " << to_string(c.algorithm) << "\n";
  o << "tau = " << c.tau << "\n";
  o << "iterations = " << c.iterations << "\n";
  o << "seed = " << c.seed << "\n";
  o << "repetitions = " << c.repetitions << "\n";
  o << "output = " << c.output << "\n";
  if (c.step) o << "step = " << format_double(*c.step) << "\n";
  if (c.x_start) o << "x_start = " << format_vector(*c.x_start) << "\n";
  o << "set = " << set_kind_name(c.set.kind) << "\n";
  if (c.set.lo.size()) o << "set_lo = " << format_vector(c.set.lo) << "\n";
  if (c.set.hi.size()) o << "set_hi = " << format_vector(c.set.hi) << "\n";
  if (c.set.center.size()) o << "set_center = " << format_vector(c.set.center) << "\n";
  o << "set_radius = " << format_double(c.set.radius) << "\n";
  if (c.restart) {
    o << "restart = " << (c.restart->kind == RestartSchedule::Kind::halving ? "halving" : "fixed")
      << "\n";
    o << "restart_period = " << c.restart->period << "\n";
    o << "max_restarts = " << c.restart->max_restarts << "\n";
  } else {
    o << "restart = none\n";
  }

  o << "\n[noise]\n";
  o << "model = " << noise_kind_name(c.noise.kind) << "\n";
  o << "delta = " << format_double(c.noise.delta) << "\n";
  o << "alpha = " << format_double(c.noise.alpha) << "\n";
  o << "mode = " << c.noise.mode << "\n";
  if (c.noise.bias.size()) o << "bias = " << format_vector(c.noise.bias) << "\n";
  o << "h = " << format_double(c.noise.h) << "\n";
  o << "samples = " << c.noise.samples << "\n";
  o << "value_noise = " << format_double(c.noise.value_noise) << "\n";

  if (c.stopping) {
    o << "\n[stopping]\n";
    o << "variant = " << (c.stopping->variant == StoppingVariant::adaptive ? "adaptive" : "theorem")
      << "\n";
    o << "eps = " << format_double(c.stopping->eps) << "\n";
    if (c.stopping->R) o << "R = " << format_double(*c.stopping->R) << "\n";
  }
  if (c.sweep) {
    o << "\n[sweep]\n";
    if (!c.sweep->param.empty()) o << "param = " << c.sweep->param << "\n";
    std::string vals;
    for (std::size_t i = 0; i < c.sweep->values.size(); ++i) {
      if (i) vals += ' ';
      vals += format_double(c.sweep->values[i]);
    }
    o << "values = " << vals << "\n";
  }
  return o.str();
}

GradientOracle make_oracle(const NoiseSpec& s, Eigen::Index dim) {
  using K = NoiseSpec::Kind;
  switch (s.kind) {
    case K::none: return GradientOracle::exact();
    case K::absolute: {
      AbsoluteNoise a;
      a.delta = s.delta;
      if (s.mode == "fixed_bias") {
        a.mode = AbsoluteNoise::Mode::fixed_bias;
        a.bias = s.bias;
      } else if (s.mode != "sphere_uniform") {
        throw ConfigError("absolute noise: mode must be sphere_uniform or fixed_bias");
      }
      NoiseModel m = a;
      validate(m, dim);
      return GradientOracle::with_noise(m);
    }
    case K::relative: {
      RelativeNoise r;
      r.alpha = s.alpha;
      if (s.mode == "shrink") r.mode = RelativeNoise::Mode::shrink;
      else if (s.mode != "sphere_uniform") {
        throw ConfigError("relative noise: mode must be sphere_uniform or shrink");
      }
      NoiseModel m = r;
      validate(m, dim);
      return GradientOracle::with_noise(m);
    }
    case K::central_fd:
    case K::sphere:
    case K::gaussian: {
      ZerothOrder z;
      z.scheme = s.kind == K::central_fd ? ZerothOrder::Scheme::central_fd
                 : s.kind == K::sphere   ? ZerothOrder::Scheme::sphere
                                         : ZerothOrder::Scheme::gaussian;
      if (!(s.h > 0.0)) throw ConfigError("noise.h must be > 0");
      if (s.samples < 1) throw ConfigError("noise.samples must be >= 1");
      if (!(s.value_noise >= 0.0)) throw ConfigError("noise.value_noise must be >= 0");
      z.h = s.h;
      z.samples = s.samples;
      z.value_noise = s.value_noise;
      return GradientOracle::zeroth_order(z);
    }
  }
  throw ConfigError("unknown noise model");
}

FeasibleSet make_set(const SetSpec& s) {
  switch (s.kind) {
    case SetSpec::Kind::whole: return WholeSpace{};
    case SetSpec::Kind::box: return Box{s.lo, s.hi};
    case SetSpec::Kind::ball: return Ball{s.center, s.radius};
  }
  return WholeSpace{};
}

BoundExperiment bind(const ExperimentConfig& c) {
  if (c.repetitions < 1) throw ConfigError("solver.repetitions must be >= 1");
  BoundExperiment b{build_problem(c.problem), {}, {}};
  const SmoothProblem& p = b.problem;
  b.oracle = make_oracle(c.noise, p.dim);
  SolverConfig s = make_solver_config(p, c.algorithm, c.iterations, c.tau);
  s.seed = c.seed;
  s.set = make_set(c.set);
  s.restart = c.restart;
  s.step = c.step;
  if (c.x_start) {
    if (c.x_start->size() == 1 && p.dim > 1) s.x_start = Vector::Constant(p.dim, (*c.x_start)[0]);
    else s.x_start = c.x_start;
  }
  if (c.stopping) {
    StoppingConfig st;
    st.variant = c.stopping->variant;
    st.eps = c.stopping->eps;
    const Vector x0 = s.x_start.value_or(Vector::Zero(p.dim));
    if (c.stopping->R) st.R = *c.stopping->R;
    else if (p.x_star) st.R = (x0 - *p.x_star).norm();
    else throw ConfigError("stopping.R is required when x* is unknown");
    const auto delta = absolute_delta(b.oracle);
    if (!delta) throw ConfigError("the stopping rule needs an exact or absolute-noise oracle");
    const auto ic = inexactness_constants(*delta, p.L_f, p.mu);
    st.delta1 = ic.delta1;
    st.delta2 = ic.delta2;
    st.f_star = p.f_star;
    s.stopping = st;
  }
  validate(s, p);
  b.solver = std::move(s);
  return b;
}

}  // namespace noisy_stm
