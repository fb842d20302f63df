// Monte-Carlo properties. Slow: minutes, not seconds.

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "sparsepr/harness.hpp"
#include "sparsepr/inference.hpp"
#include "sparsepr/twf.hpp"
#include "test_support.hpp"

using namespace sparsepr;

namespace {

constexpr std::uint64_t kSeed = 1;

bool contained(const SignalVector& est, const SignalVector& truth) {
  for (Index k : est.support()) {
    if (truth[k] == 0.0) return false;
  }
  return true;
}

double rel_error_up_to_sign(const Vector& est, const Vector& truth) {
  return std::min((est - truth).norm(), (est + truth).norm()) / truth.norm();
}

ExperimentConfig table1_config(Index s) {
  ExperimentConfig cfg;
  cfg.s = s;
  cfg.nsr = 0.3;
  cfg.master_seed = kSeed;
  return cfg;
}

// Desk-scale swap runs with a fixed signal; keeps every coordinate.
struct DeskRuns {
  SignalVector beta;
  double sigma = 0.0;
  std::vector<DebiasedEstimate> estimates;
};

DeskRuns desk_runs(Index p, Index n, Index s, int reps, std::uint64_t stream) {
  DeskRuns out;
  Rng master(derive_seed(kSeed, stream));
  out.beta = generate_signal(p, s, master);
  out.sigma = nsr_to_sigma(0.3, out.beta);
  for (int rep = 0; rep < reps; ++rep) {
    const Rng r = master.split(static_cast<std::uint64_t>(rep) + 1);
    Rng data = r.split(0), split = r.split(1);
    const auto inst = generate_instance(out.beta, 2 * n, out.sigma, data);
    out.estimates.push_back(swap_estimate(inst, TwfTuning{}, out.sigma, split));
  }
  return out;
}

}  // namespace

TEST_CASE("TWF support stays inside the true support") {
  int inside = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(derive_seed(kSeed, 201), static_cast<std::uint64_t>(rep)));
    const auto beta = generate_signal(1000, 50, rng);
    const auto inst = generate_instance(beta, 3000, nsr_to_sigma(0.3, beta), rng);
    inside += contained(run_twf(inst, TwfTuning{}).beta_tilde, beta);
  }
  MESSAGE("support contained in " << inside << "/" << reps << " runs");
  CHECK(inside >= 90);
}

TEST_CASE("TWF recovers noiseless signals at p=1000, n=3000, s=50") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(derive_seed(kSeed, 202), seed));
    const auto beta = generate_signal(1000, 50, rng);
    const auto inst = generate_instance(beta, 3000, 0.0, rng);
    const auto est = run_twf(inst, TwfTuning{});
    CHECK(rel_error_up_to_sign(est.beta_tilde.values(), beta.values()) < 1e-3);
  }
}

TEST_CASE("spectral initialization lands within the signal norm") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(derive_seed(kSeed, 203), seed));
    const auto beta = generate_signal(1000, 50, rng);
    const auto inst = generate_instance(beta, 3000, nsr_to_sigma(0.3, beta), rng);
    const auto init = spectral_init(inst, TwfTuning{});
    CHECK(rel_error_up_to_sign(init.beta_tilde.values(), beta.values()) < 1.0);
  }
}

TEST_CASE("noise estimate tracks the noise-to-signal ratio") {
  // The ratio has a per-draw sd near 0.1, so 400 draws pin the mean to about 1.5%.
  std::vector<double> ratio;
  for (std::uint64_t rep = 0; rep < 400; ++rep) {
    Rng rng(derive_seed(derive_seed(kSeed, 204), rep));
    const auto beta = generate_signal(1000, 50, rng);
    // Config n = 3000 per half, so instances carry 6000 rows.
    const auto inst = generate_instance(beta, 6000, nsr_to_sigma(0.3, beta), rng);
    const auto est = estimate_noise(inst.y);
    ratio.push_back(est.sigma_hat / est.phi_sq);
  }
  const double avg = testing::mean(ratio);
  MESSAGE("mean sigma_hat/phi_sq = " << avg);
  CHECK(std::abs(avg - 0.3) < 0.15 * 0.3);
}

TEST_CASE("desk scale: swap halves the variance, max and Scheffe intervals cover") {
  const auto runs = desk_runs(200, 1000, 10, 200, 205);
  const auto& beta = runs.beta;
  std::vector<Index> nulls;
  for (Index k = 0; k < beta.size(); ++k) {
    if (beta[k] == 0.0) nulls.push_back(k);
  }

  SUBCASE("variance ratio on null coordinates") {
    double sum = 0.0;
    for (Index k : nulls) {
      std::vector<double> sw, h1;
      for (const auto& e : runs.estimates) {
        sw.push_back(e.beta_swap[k]);
        h1.push_back(e.beta_hat1[k]);
      }
      sum += testing::variance(sw) / testing::variance(h1);
    }
    const double avg = sum / static_cast<double>(nulls.size());
    MESSAGE("mean var(swap)/var(hat1) over " << nulls.size() << " null coordinates = " << avg);
    CHECK(avg >= 0.35);
    CHECK(avg <= 0.65);
  }

  SUBCASE("standardized errors at a fixed null coordinate look normal") {
    const Index k = nulls.front();
    std::vector<double> z;
    for (const auto& e : runs.estimates) {
      const double se = e.sigma * std::sqrt(e.combined_tau_sq(k) / static_cast<double>(e.n_half));
      z.push_back(e.beta_swap[k] / se);
    }
    const auto [skew, kurt] = testing::shape(z);
    MESSAGE("coordinate " << k << ": skewness " << skew << ", excess kurtosis " << kurt);
    CHECK(std::abs(skew) < 0.5);
    CHECK(std::abs(kurt) < 1.0);
  }

  SUBCASE("simultaneous max interval") {
    int covered = 0;
    for (const auto& e : runs.estimates) {
      const Vector star = align_sign(e.beta_tilde1, beta).values();
      const double worst = (e.beta_swap - star).cwiseAbs().maxCoeff();
      covered += worst <= simultaneous_max_ci(e, 0.05);
    }
    MESSAGE("max-error event covered in " << covered << "/200 reps");
    CHECK(covered >= 180);
  }
}

TEST_CASE("Scheffe intervals cover random directions") {
  const auto runs = desk_runs(20, 1000, 4, 200, 206);
  Rng dirs(derive_seed(kSeed, 207));
  int all_covered = 0;
  for (const auto& e : runs.estimates) {
    const Matrix V = covariance_matrix(e, e.beta_tilde1, e.beta_tilde2);
    const Vector star = align_sign(e.beta_tilde1, runs.beta).values();
    bool ok = true;
    for (int d = 0; d < 5; ++d) {
      const Vector h = testing::random_vector(20, dirs);
      ok = ok && scheffe_ci(e, V, h, 0.05).contains(h.dot(star));
    }
    all_covered += ok;
  }
  MESSAGE("all five directions covered in " << all_covered << "/200 reps");
  CHECK(all_covered >= 190);
}

TEST_CASE("Table-1 setting: TWF errors and de-TWF histograms") {
  const auto cfg = table1_config(50);
  const auto setup = prepare_experiment(cfg);
  const auto records = run_experiment(cfg, setup, 0);
  const auto table = summarize(records, setup.groups);
  for (const char* g : {"large", "median", "small"}) {
    const auto& twf = table.at(g, Method::Twf);
    MESSAGE(g << " TWF bias " << twf.bias << " sd " << twf.sd);
    CHECK(std::abs(twf.bias) <= 0.06);
    CHECK(twf.sd == doctest::Approx(0.02).epsilon(0.5));

    const auto errors = pooled_errors(records, setup.groups, g, Method::DeTwf);
    REQUIRE(errors.size() == 400);
    const auto bins = histogram_bins(errors, 20);
    const auto mode = std::max_element(bins.begin(), bins.end(), [](const auto& a, const auto& b) {
      return a.count < b.count;
    });
    const double m = testing::mean(errors);
    const double sd = std::sqrt(testing::variance(errors));
    MESSAGE(g << " de-TWF mode bin [" << mode->lo << ", " << mode->hi << "], mean " << m
              << ", sd " << sd);
    CHECK(std::abs(m) < sd / 4.0);
    CHECK(mode->lo <= 0.0);
    CHECK(mode->hi >= 0.0);
  }
}

TEST_CASE("Table-1 setting with s=100: de-TWF bias stays small") {
  const auto cfg = table1_config(100);
  const auto setup = prepare_experiment(cfg);
  const auto records = run_experiment(cfg, setup, 0);
  const auto table = summarize(records, setup.groups);
  for (const char* g : {"large", "median", "small"}) {
    const auto& de = table.at(g, Method::DeTwf);
    MESSAGE(g << " de-TWF bias " << de.bias << " sd " << de.sd);
    CHECK(std::abs(de.bias) <= 0.0061);
  }
}
