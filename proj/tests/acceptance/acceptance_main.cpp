// Acceptance checks. One line per criterion:
//   PASS|FAIL  <id>  <name>  <measured values>
// Usage: acceptance [id ...]   (no arguments runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "sparsepr/cli.hpp"
#include "sparsepr/harness.hpp"
#include "sparsepr/inference.hpp"
#include "sparsepr/twf.hpp"

using namespace sparsepr;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMasterSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

Vector normals(Index p, Rng& rng) {
  Vector v(p);
  for (Index k = 0; k < p; ++k) v[k] = rng.normal();
  return v;
}

double naive_objective(const Vector& b, const Instance& inst) {
  double total = 0.0;
  for (Index j = 0; j < inst.n(); ++j) {
    double dot = 0.0;
    for (Index k = 0; k < inst.p(); ++k) dot += inst.X(j, k) * b[k];
    total += (dot * dot - inst.y[j]) * (dot * dot - inst.y[j]);
  }
  return total / (4.0 * static_cast<double>(inst.n()));
}

// Desk-scale setting shared by the fast coverage, variance and normality checks.
ExperimentConfig desk_config() {
  ExperimentConfig cfg;
  cfg.p = 200;
  cfg.n = 1000;
  cfg.s = 10;
  cfg.reps = 200;
  cfg.master_seed = kMasterSeed;
  cfg.group_targets = {{"large", 3.0, 3}, {"median", 1.0, 3}, {"small", 0.1, 2}};
  return cfg;
}

Outcome fisher_inverse() {
  Rng rng(derive_seed(kMasterSeed, 101));
  double worst = 0.0;
  int draws = 0;
  for (Index p : {5, 30, 200}) {
    for (int t = 0; t < 100; ++t, ++draws) {
      SignalVector b(normals(p, rng));
      if (t % 2 == 1) {
        // Sparse draws exercise the off-support branch.
        for (Index k = 0; k < p; ++k) {
          if (rng.below(4) != 0) b.values()[k] = 0.0;
        }
        if (b.is_zero()) b.values()[0] = 1.0;
      }
      const Matrix info = fisher_info(b);
      for (Index k = 0; k < p; ++k) {
        const Vector r = info * (-2.0 * correction_vector(b, k).w) - Vector::Unit(p, k);
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
      }
    }
  }
  return {worst < 1e-10, std::to_string(draws) + " draws, max residual " + fmt("%.2e", worst)};
}

Outcome gradient_fd() {
  Rng rng(derive_seed(kMasterSeed, 102));
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto beta = generate_signal(20, 5, rng);
    const auto inst = generate_instance(beta, 50, 0.5, rng);
    const Vector b = normals(20, rng);
    const Vector g = gradient(SignalVector(b), inst);
    Vector fd(20);
    for (Index k = 0; k < 20; ++k) {
      const double h = 1e-5 * (std::abs(b[k]) + 1.0);
      Vector up = b, down = b;
      up[k] += h;
      down[k] -= h;
      fd[k] = (naive_objective(up, inst) - naive_objective(down, inst)) / (2.0 * h);
    }
    worst = std::max(worst, (g - fd).norm() / g.norm());
  }
  return {worst < 1e-6, "50 instances, max relative l2 error " + fmt("%.2e", worst)};
}

Outcome noiseless_chain() {
  double worst_twf = 0.0, worst_debias = 0.0;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(derive_seed(kMasterSeed, 103), seed));
    const auto beta = generate_signal(200, 10, rng);
    const auto inst = generate_instance(beta, 800, 0.0, rng);
    const Vector est = run_twf(inst, TwfTuning{}).beta_tilde.values();
    const Vector& b = beta.values();
    const double rel = std::min((est - b).norm(), (est + b).norm()) / b.norm();
    const double deb = (debias_half(beta, inst) - b).cwiseAbs().maxCoeff();
    worst_twf = std::max(worst_twf, rel);
    worst_debias = std::max(worst_debias, deb);
    ok += rel < 1e-3 && deb < 1e-12;
  }
  return {ok == 10, std::to_string(ok) + "/10 seeds, max TWF rel error " + fmt("%.2e", worst_twf) +
                        ", max debias deviation " + fmt("%.2e", worst_debias)};
}

Outcome tau_and_weights() {
  Rng rng(derive_seed(kMasterSeed, 104));
  double worst_form = 0.0;
  int weight_failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index p = 2 + static_cast<Index>(rng.below(30));
    const SignalVector b(normals(p, rng));
    const Index k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p)));
    const double sq = b.squared_norm();
    const Vector w = correction_vector(b, k).w;
    const double full = sq * w.squaredNorm() + 2.0 * std::pow(b.values().dot(w), 2);
    const double reduced = sq * w.squaredNorm() + b[k] * b[k] / (18.0 * sq * sq);
    const double api = tau_sq(b, k);
    const double closed = tau_sq_all(b)[k];
    worst_form = std::max({worst_form, std::abs(full - reduced) / full,
                           std::abs(api - full) / full, std::abs(closed - full) / full});

    DebiasedEstimate est;
    const double t1 = std::exp(2.0 * rng.normal()), t2 = std::exp(2.0 * rng.normal());
    est.beta_hat1 = Vector::Zero(1);
    est.beta_hat2 = Vector::Zero(1);
    est.tau1_sq = Vector::Constant(1, t1);
    est.tau2_sq = Vector::Constant(1, t2);
    combine_halves(est);
    const double a = est.a[0];
    const double best = a * a * t1 + (1 - a) * (1 - a) * t2;
    for (int i = 0; i <= 200; ++i) {
      const double u = i / 200.0;
      if (best > u * u * t1 + (1 - u) * (1 - u) * t2) ++weight_failures;
    }
  }
  return {worst_form < 1e-12 && weight_failures == 0,
          "1000 draws, max relative form gap " + fmt("%.2e", worst_form) + ", weight violations " +
              std::to_string(weight_failures)};
}

Outcome table1_anchor() {
  ExperimentConfig cfg;
  cfg.nsr = 0.3;
  cfg.master_seed = kMasterSeed;
  const auto setup = prepare_experiment(cfg);
  const auto records = run_experiment(cfg, setup, 0);
  const auto table = summarize(records, setup.groups);
  bool pass = true;
  std::ostringstream d;
  for (const char* g : {"large", "median", "small"}) {
    const auto& de = table.at(g, Method::DeTwf);
    const auto& tw = table.at(g, Method::Twf);
    pass = pass && std::abs(de.bias) <= 0.01 && de.sd >= 0.01 && de.sd <= 0.04;
    if (std::string(g) != "large") pass = pass && std::abs(de.bias) < std::abs(tw.bias);
    d << g << ": TWF bias " << fmt("%+.4f", tw.bias) << " sd " << fmt("%.4f", tw.sd)
      << ", de-TWF bias " << fmt("%+.4f", de.bias) << " sd " << fmt("%.4f", de.sd) << " (n="
      << de.n_pool << "); ";
  }
  return {pass, d.str()};
}

Outcome coverage_run(ExperimentConfig cfg, double lo, double hi) {
  const auto setup = prepare_experiment(cfg);
  const auto records = run_experiment(cfg, setup, 0);
  const auto rows = coverage_table(records, setup.groups);
  std::ostringstream d;
  for (const auto& r : rows) d << r.group << " " << fmt("%.2f", r.coverage_pct) << "% ";
  d << "(pool " << rows[0].n_pool << ", alpha " << cfg.alpha << ")";
  const double all = rows[0].coverage_pct;
  return {all >= lo && all <= hi, d.str()};
}

Outcome table2_full() {
  ExperimentConfig cfg;
  cfg.p = 1000;
  cfg.n = 5000;
  cfg.s = 40;
  cfg.sigma = 5.0;
  cfg.reps = 200;
  cfg.alpha = 0.04;  // r = z_{0.98}
  cfg.master_seed = kMasterSeed;
  return coverage_run(cfg, 89.9, 95.9);
}

Outcome table2_fast() {
  auto cfg = desk_config();
  cfg.sigma = 5.0;
  cfg.alpha = 0.05;
  return coverage_run(cfg, 91.0, 98.0);
}

std::vector<ReplicationRecord> desk_nsr_run(TrackedCoordinates& groups) {
  auto cfg = desk_config();
  cfg.nsr = 0.3;
  const auto setup = prepare_experiment(cfg);
  groups = setup.groups;
  return run_experiment(cfg, setup, 0);
}

Outcome swap_variance() {
  TrackedCoordinates groups;
  const auto records = desk_nsr_run(groups);
  const auto m = records.front().errors_detwf.size();
  double sum = 0.0;
  std::ostringstream d;
  for (Index i = 0; i < m; ++i) {
    std::vector<double> sw, h1;
    for (const auto& r : records) {
      sw.push_back(r.errors_detwf[i]);
      h1.push_back(r.errors_hat1[i]);
    }
    const double ratio = sample_var(sw) / sample_var(h1);
    sum += ratio;
    d << fmt("%.3f", ratio) << " ";
  }
  const double avg = sum / static_cast<double>(m);
  return {avg >= 0.35 && avg <= 0.65,
          "mean ratio " + fmt("%.4f", avg) + " over " + std::to_string(m) + " coordinates [" +
              d.str() + "]"};
}

Outcome normality() {
  TrackedCoordinates groups;
  const auto records = desk_nsr_run(groups);
  bool pass = true;
  std::ostringstream d;
  Index offset = 0;
  for (const auto& g : groups) {
    std::vector<double> z;
    for (const auto& r : records) {
      for (std::size_t c = 0; c < g.coords.size(); ++c) {
        const auto i = offset + static_cast<Index>(c);
        z.push_back(r.errors_detwf[i] / r.std_errors[i]);
      }
    }
    offset += static_cast<Index>(g.coords.size());
    const double m = mean(z);
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : z) {
      m2 += std::pow(x - m, 2);
      m3 += std::pow(x - m, 3);
      m4 += std::pow(x - m, 4);
    }
    const double n = static_cast<double>(z.size());
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2) - 3.0;
    pass = pass && std::abs(skew) < 0.5 && std::abs(kurt) < 1.0;
    d << g.label << ": skew " << fmt("%+.3f", skew) << " exkurt " << fmt("%+.3f", kurt) << " (n="
      << z.size() << "); ";
  }
  return {pass, d.str()};
}

Outcome sigma_hat_accuracy() {
  std::vector<double> rel, ratio;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    Rng rng(derive_seed(derive_seed(kMasterSeed, 109), rep));
    const auto beta = generate_signal(1000, 50, rng);
    const double sigma = nsr_to_sigma(0.3, beta);
    const auto inst = generate_instance(beta, 6000, sigma, rng);
    const double s = estimate_noise(inst.y).sigma_hat;
    rel.push_back(std::abs(s - sigma) / sigma);
    ratio.push_back(s / sigma);
  }
  const double avg = mean(rel);
  return {avg < 0.10, "mean |sigma_hat - sigma|/sigma " + fmt("%.4f", avg) +
                          ", mean sigma_hat/sigma " + fmt("%.4f", mean(ratio)) + " over 50 repeats"};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sparsepr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("sparsepr_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "det.cfg");
    cfg << "p = 200\nn = 1000\ns = 10\nnsr = 0.3\nreps = 16\nbins = 20\n"
           "group_targets = large:3:3, median:1:3, small:0.1:2\n";
  }
  const std::string cfg = (root / "det.cfg").string();
  const std::string seed = std::to_string(kMasterSeed);
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"a", "1"}, {"b", "1"}, {"c", "8"}};
  for (const auto& [dir, threads] : runs) {
    if (cli({"--threads", threads, "experiment", "all", "--config", cfg, "--seed", seed, "--out",
             (root / dir).string()}) != 0) {
      fs::remove_all(root);
      return {false, "experiment run failed"};
    }
  }
  int identical = 0, compared = 0;
  for (const char* f : {"table1.csv", "coverage.csv", "histograms.csv"}) {
    const auto ref = slurp(root / "a" / f);
    for (const char* other : {"b", "c"}) {
      ++compared;
      identical += !ref.empty() && slurp(root / other / f) == ref;
    }
  }
  fs::remove_all(root);
  return {identical == compared, std::to_string(identical) + "/" + std::to_string(compared) +
                                     " file pairs byte-identical (repeat run, threads 1 vs 8)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"1", "fisher-inverse-identity", 10, fisher_inverse},
      {"2", "gradient-finite-differences", 10, gradient_fd},
      {"3", "noiseless-exactness-chain", 60, noiseless_chain},
      {"4", "tau-forms-and-swap-weights", 5, tau_and_weights},
      {"5", "table1-anchor", 1800, table1_anchor},
      {"6-full", "table2-anchor", 3600, table2_full},
      {"6-fast", "table2-fast-variant", 300, table2_fast},
      {"7", "swap-variance-reduction", 0, swap_variance},
      {"8", "standardized-error-normality", 0, normality},
      {"9", "sigma-hat-accuracy", 0, sigma_hat_accuracy},
      {"10", "determinism", 0, determinism},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string timing = fmt("%.1fs", secs);
    if (c.budget_s > 0) {
      timing += " (budget " + fmt("%.0fs", c.budget_s) + ")";
      pass = pass && secs < c.budget_s;
    }
    std::cout << (pass ? "PASS" : "FAIL") << "  " << c.id << "  " << c.name << "  " << o.detail
              << "  [" << timing << "]" << std::endl;
    failures += !pass;
  }
  return failures == 0 ? 0 : 1;
}
