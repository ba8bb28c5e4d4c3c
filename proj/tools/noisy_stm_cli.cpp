#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "noisy_stm/harness.hpp"
#include "noisy_stm/sequences.hpp"

using namespace noisy_stm;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  ExperimentConfig c = load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.output = g.out;
  return c;
}

[[noreturn]] void usage(const std::string& msg) { throw CLI::ValidationError(msg); }

double need(const std::optional<double>& v, const char* flag) {
  if (!v) usage(std::string("missing required flag ") + flag);
  return *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similar triangles method under noisy gradients: experiments and checks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config file");
  app.add_option("--seed", g.seed, "master seed, overrides the config");
  app.add_option("--out", g.out, "output directory, overrides the config");

  auto* run = app.add_subcommand("run", "run the configured experiment");

  auto* sw = app.add_subcommand("sweep", "run the experiment across one parameter axis");
  std::string param;
  std::vector<double> values;
  sw->add_option("--param", param, "section.key to sweep (default: [sweep] param)");
  sw->add_option("--values", values, "axis values (default: [sweep] values)")->delimiter(',');

  auto* th = app.add_subcommand("threshold", "bisection for the relative noise threshold");
  ThresholdOptions topt;
  th->add_option("--n-probe", topt.n_probe, "probe iteration")->capture_default_str();
  th->add_option("--factor", topt.factor, "success if gap < factor * noiseless gap")
      ->capture_default_str();
  th->add_option("--bisections", topt.bisections)->capture_default_str();

  auto* bu = app.add_subcommand("budget", "noise and iteration budgets");
  std::string regime;
  std::optional<double> L, mu, R, eps, Rstar, eps1;
  bu->add_option("--regime", regime, "sc | reg | linsys")
      ->required()
      ->check(CLI::IsMember({"sc", "reg", "linsys"}));
  bu->add_option("--L", L, "internal smoothness constant L");
  bu->add_option("--mu", mu);
  bu->add_option("--R", R);
  bu->add_option("--eps", eps);
  bu->add_option("--Rstar", Rstar);
  bu->add_option("--eps1", eps1);

  auto* ve = app.add_subcommand("verify", "run invariant suites");
  std::string scope = "all", poison;
  ve->add_option("--scope", scope, "core|sequences|oracles|geometry|solvers|problems|harness|all")
      ->capture_default_str();
  ve->add_option("--poison", poison, "inject a fault (recurrence)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const ExperimentConfig c = load(g);
      const RunSummary s = run_experiment(c, c.output);
      std::cout << s.text;
      for (const auto& f : s.files) std::cout << "wrote " << f.string() << "\n";
      for (const auto& t : s.traces) {
        if (t.aborted) return 1;
      }
    } else if (*sw) {
      const ExperimentConfig c = load(g);
      SweepSpec axis = c.sweep.value_or(SweepSpec{});
      if (!param.empty()) axis.param = param;
      if (!values.empty()) axis.values = values;
      const SweepSummary s = sweep(c, axis, c.output);
      for (std::size_t i = 0; i < s.per_value.size(); ++i) {
        std::cout << axis.param << " = " << format_double(axis.values[i]) << "\n"
                  << s.per_value[i].text;
      }
      std::cout << "wrote " << s.table.string() << "\n";
    } else if (*th) {
      const ExperimentConfig c = load(g);
      std::cout << threshold_search(c, topt).text;
    } else if (*bu) {
      Budget b;
      if (regime == "sc") {
        b = budget_strongly_convex(need(L, "--L"), need(mu, "--mu"), need(R, "--R"),
                                   need(eps, "--eps"));
      } else if (regime == "reg") {
        b = budget_regularized(need(L, "--L"), need(R, "--R"), need(eps, "--eps"));
      } else {
        b = budget_linear_system(need(L, "--L"), need(R, "--R"), need(Rstar, "--Rstar"),
                                 need(eps1, "--eps1"));
      }
      std::cout << "regime " << regime << "\n";
      std::printf("delta_max %.6g\nN %d\n", b.delta_max, b.N);
      if (b.mu) std::printf("mu_reg %.6g\n", *b.mu);
    } else if (*ve) {
      const VerifyReport r = verify(scope, poison);
      std::cout << r.text();
      return r.all_passed() ? 0 : 1;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
