#include "sparsepr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"

#include "sparsepr/errors.hpp"
#include "sparsepr/harness.hpp"
#include "sparsepr/io.hpp"

namespace sparsepr {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kInstanceStream = 2;
constexpr std::uint64_t kSplitStream = 3;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 0;
  std::string format = "csv";
};

ExperimentConfig resolve_config(const GlobalOptions& g, bool required) {
  ExperimentConfig cfg;
  if (!g.config.empty()) {
    cfg = load_config(g.config);
  } else if (required) {
    throw InvalidArgument("--config is required for this command");
  }
  if (g.seed) cfg.master_seed = *g.seed;
  return cfg;
}

std::ofstream open_output(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out);
  const fs::path path = fs::path(g.out) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  return os;
}

Instance simulated_instance(const ExperimentConfig& cfg) {
  const ExperimentSetup setup = prepare_experiment(cfg);
  Rng rng(derive_seed(cfg.master_seed, kInstanceStream));
  return generate_instance(setup.beta, 2 * cfg.n, setup.sigma, rng);
}

int run_simulate(const GlobalOptions& g, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g, true);
  const Instance inst = simulated_instance(cfg);
  auto os = open_output(g, "instance.json");
  os << instance_to_json(inst).dump() << '\n';
  out << "simulate: wrote " << (fs::path(g.out) / "instance.json").string() << " (n=" << inst.n()
      << ", p=" << inst.p() << ")\n";
  return kExitOk;
}

int run_solve(const GlobalOptions& g, const std::string& instance_path, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g, false);
  cfg.tuning.validate();
  const Instance inst = load_instance(instance_path);
  const SignalEstimate est = run_twf(inst, cfg.tuning);
  const Vector& b = est.beta_tilde.values();
  if (g.format == "json") {
    nlohmann::json j{{"iterations", est.iterations},
                     {"converged", est.converged},
                     {"power_converged", est.power_converged},
                     {"init_support", est.init_support},
                     {"phi_sq", est.noise.phi_sq},
                     {"sigma_hat", est.noise.sigma_hat},
                     {"beta_tilde", std::vector<double>(b.begin(), b.end())}};
    open_output(g, "estimate.json") << j.dump(2) << '\n';
  } else {
    auto os = open_output(g, "estimate.csv");
    os << "coordinate,beta_tilde\n";
    for (Index k = 0; k < b.size(); ++k) os << k << ',' << format_double(b[k]) << '\n';
  }
  out << "solve: " << est.iterations << " iterations, converged=" << (est.converged ? "yes" : "no")
      << ", support size " << est.beta_tilde.sparsity() << '\n';
  return kExitOk;
}

int run_infer(const GlobalOptions& g, const std::string& instance_path, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g, instance_path.empty());
  cfg.tuning.validate();
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("config: alpha must lie in (0, 1)");
  const Instance inst = instance_path.empty() ? simulated_instance(cfg) : load_instance(instance_path);
  Rng rng(derive_seed(cfg.master_seed, kSplitStream));
  const DebiasedEstimate est = swap_estimate(inst, cfg.tuning, inst.sigma, rng);
  const double max_half = simultaneous_max_ci(est, cfg.alpha);

  std::vector<Interval> cis;
  for (Index k = 0; k < est.p(); ++k) cis.push_back(coordinate_ci(est, k, cfg.alpha));

  if (g.format == "json") {
    auto vec = [](const Vector& v) { return std::vector<double>(v.begin(), v.end()); };
    nlohmann::json j{{"n_half", est.n_half},
                     {"sigma", est.sigma},
                     {"sigma_estimated", est.sigma_estimated},
                     {"s_hat", est.s_hat},
                     {"alpha", cfg.alpha},
                     {"max_halfwidth", max_half},
                     {"beta_tilde1", vec(est.beta_tilde1.values())},
                     {"beta_tilde2", vec(est.beta_tilde2.values())},
                     {"beta_hat1", vec(est.beta_hat1)},
                     {"beta_hat2", vec(est.beta_hat2)},
                     {"tau1_sq", vec(est.tau1_sq)},
                     {"tau2_sq", vec(est.tau2_sq)},
                     {"a", vec(est.a)},
                     {"beta_swap", vec(est.beta_swap)}};
    auto lo = nlohmann::json::array();
    auto hi = nlohmann::json::array();
    for (const auto& ci : cis) {
      lo.push_back(ci.lo);
      hi.push_back(ci.hi);
    }
    j["ci_lo"] = std::move(lo);
    j["ci_hi"] = std::move(hi);
    open_output(g, "inference.json") << j.dump(2) << '\n';
  } else {
    auto os = open_output(g, "inference.csv");
    os << "coordinate,beta_tilde1,beta_tilde2,beta_hat1,beta_hat2,tau1_sq,tau2_sq,a,beta_swap,ci_lo,ci_hi\n";
    for (Index k = 0; k < est.p(); ++k) {
      const auto i = static_cast<std::size_t>(k);
      os << k << ',' << format_double(est.beta_tilde1[k]) << ',' << format_double(est.beta_tilde2[k])
         << ',' << format_double(est.beta_hat1[k]) << ',' << format_double(est.beta_hat2[k]) << ','
         << format_double(est.tau1_sq[k]) << ',' << format_double(est.tau2_sq[k]) << ','
         << format_double(est.a[k]) << ',' << format_double(est.beta_swap[k]) << ','
         << format_double(cis[i].lo) << ',' << format_double(cis[i].hi) << '\n';
    }
    auto summary = open_output(g, "inference_summary.csv");
    summary << "key,value\n"
            << "n_half," << est.n_half << '\n'
            << "sigma," << format_double(est.sigma) << '\n'
            << "sigma_estimated," << (est.sigma_estimated ? 1 : 0) << '\n'
            << "s_hat," << est.s_hat << '\n'
            << "alpha," << format_double(cfg.alpha) << '\n'
            << "max_halfwidth," << format_double(max_half) << '\n';
  }
  out << "infer: n=" << est.n_half << " per half, s_hat=" << est.s_hat
      << ", sigma=" << format_double(est.sigma) << (est.sigma_estimated ? " (estimated)" : "") << '\n';
  return kExitOk;
}

int run_experiment_cmd(const GlobalOptions& g, const std::string& kind, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(g, true);
  const ExperimentSetup setup = prepare_experiment(cfg);
  const auto records = run_experiment(cfg, setup, g.threads);
  const bool json = g.format == "json";
  const std::string ext = json ? ".json" : ".csv";

  if (kind == "table1" || kind == "all") {
    const SummaryTable table = summarize(records, setup.groups);
    auto os = open_output(g, "table1" + ext);
    if (json) os << table1_json(table).dump(2) << '\n';
    else write_table1_csv(os, table);
  }
  if (kind == "table2" || kind == "all") {
    const auto rows = coverage_table(records, setup.groups);
    auto os = open_output(g, "coverage" + ext);
    if (json) os << coverage_json(rows).dump(2) << '\n';
    else write_coverage_csv(os, rows);
  }
  if (kind == "histograms" || kind == "all") {
    const auto rows = histogram_table(records, setup.groups, cfg.bins);
    auto os = open_output(g, "histograms" + ext);
    if (json) os << histograms_json(rows).dump(2) << '\n';
    else write_histograms_csv(os, rows);
  }
  out << "experiment " << kind << ": " << records.size() << " replications written to " << g.out << '\n';
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse phase retrieval: thresholded Wirtinger flow with debiased inference", "sparsepr"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config file (key = value lines)");
  app.add_option("--seed", g.seed, "Master seed, overrides master_seed from the config");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for experiments (0 = auto)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Draw a signal and a 2n-row instance, write instance.json");
  std::string instance_path;
  auto* solve = app.add_subcommand("solve", "Run TWF on an instance file");
  solve->add_option("--instance", instance_path, "Instance JSON file")->required();
  auto* infer = app.add_subcommand("infer", "Swap debiasing and confidence intervals");
  infer->add_option("--instance", instance_path, "Instance JSON file (simulated from the config when absent)");
  auto* experiment = app.add_subcommand("experiment", "Monte-Carlo experiment from a config file");
  std::string kind;
  experiment->add_option("kind", kind, "Which table to produce")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "histograms", "all"}));

  std::string stage = "sparsepr";
  try {
    app.parse(argc, argv);
    if (simulate->parsed()) {
      stage = "simulate";
      return run_simulate(g, out);
    }
    if (solve->parsed()) {
      stage = "solve";
      return run_solve(g, instance_path, out);
    }
    if (infer->parsed()) {
      stage = "infer";
      return run_infer(g, instance_path, out);
    }
    stage = "experiment " + kind;
    return run_experiment_cmd(g, kind, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  } catch (const InvalidArgument& e) {
    err << stage << ": invalid input: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const NumericalError& e) {
    err << stage << ": numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace sparsepr
