#include "sparsepr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "sparsepr/errors.hpp"
#include "sparsepr/quantiles.hpp"

namespace sparsepr {
namespace {

constexpr std::uint64_t kSignalStream = 0;
constexpr std::uint64_t kReplicationStream = 1;

double median_abs(std::vector<double> v) {
  for (double& x : v) x = std::abs(x);
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

const Vector& method_errors(const ReplicationRecord& r, Method m) {
  return m == Method::Twf ? r.errors_twf : r.errors_detwf;
}

// Offset of each group's block inside the flattened tracked vector.
std::vector<std::size_t> group_offsets(const TrackedCoordinates& groups) {
  std::vector<std::size_t> off;
  std::size_t at = 0;
  for (const auto& g : groups) {
    off.push_back(at);
    at += g.coords.size();
  }
  return off;
}

}  // namespace

std::vector<GroupTarget> default_group_targets() {
  return {{"large", 3.0, 4}, {"median", 1.0, 4}, {"small", 0.1, 4}};
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& why) { throw InvalidArgument("config: " + why); };
  if (p < 1) fail("p must be positive");
  if (n < 2) fail("n (per half) must be at least 2");
  if (s < 1 || s > p) fail("s must lie in [1, p]");
  if (nsr.has_value() == sigma.has_value()) fail("set exactly one of nsr and sigma");
  if (nsr && !(*nsr >= 0.0)) fail("nsr must be nonnegative");
  if (sigma && !(*sigma >= 0.0)) fail("sigma must be nonnegative");
  if (reps < 1) fail("reps must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (bins < 1) fail("bins must be positive");
  if (group_targets.empty()) fail("group_targets must name at least one group");
  Index total = 0;
  std::set<std::string> labels;
  for (const auto& g : group_targets) {
    if (g.label.empty() || g.label == "all") fail("group labels must be nonempty and not 'all'");
    if (!labels.insert(g.label).second) fail("duplicate group label '" + g.label + "'");
    if (g.count < 1) fail("group '" + g.label + "' needs a positive count");
    if (!(g.target >= 0.0)) fail("group '" + g.label + "' needs a nonnegative target");
    total += g.count;
  }
  if (total > s) fail("group counts sum to " + std::to_string(total) + " > s = " + std::to_string(s));
  tuning.validate();
}

TrackedCoordinates select_groups(const SignalVector& beta, const std::vector<GroupTarget>& targets) {
  std::vector<Index> pool = beta.support();
  TrackedCoordinates out;
  for (const auto& t : targets) {
    if (t.count < 0 || static_cast<std::size_t>(t.count) > pool.size()) {
      throw InvalidArgument("select_groups: not enough support coordinates left for group '" +
                            t.label + "'");
    }
    // pool stays ascending, so stable_sort keeps lower indices first on ties.
    std::stable_sort(pool.begin(), pool.end(), [&](Index i, Index j) {
      return std::abs(std::abs(beta[i]) - t.target) < std::abs(std::abs(beta[j]) - t.target);
    });
    TrackedGroup g{t.label, t.target, {pool.begin(), pool.begin() + t.count}};
    pool.erase(pool.begin(), pool.begin() + t.count);
    std::sort(pool.begin(), pool.end());
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Index> flatten(const TrackedCoordinates& groups) {
  std::vector<Index> all;
  for (const auto& g : groups) all.insert(all.end(), g.coords.begin(), g.coords.end());
  return all;
}

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.master_seed, kSignalStream));
  ExperimentSetup setup;
  setup.beta = generate_signal(cfg.p, cfg.s, rng);
  setup.sigma = cfg.sigma ? *cfg.sigma : nsr_to_sigma(*cfg.nsr, setup.beta);
  setup.groups = select_groups(setup.beta, cfg.group_targets);
  return setup;
}

ReplicationRecord run_replication(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                  int rep_id) {
  const Rng rep(derive_seed(derive_seed(cfg.master_seed, kReplicationStream),
                            static_cast<std::uint64_t>(rep_id)));
  Rng data = rep.split(0);
  Rng split = rep.split(1);
  const std::vector<Index> coords = flatten(setup.groups);
  const auto m = static_cast<Index>(coords.size());

  try {
    const Instance inst = generate_instance(setup.beta, 2 * cfg.n, setup.sigma, data);

    ReplicationRecord rec;
    rec.rep_id = rep_id;
    rec.alpha = cfg.alpha;

    const SignalEstimate whole = run_twf(inst, cfg.tuning);
    rec.twf_iterations = whole.iterations;
    const SignalVector star_twf = align_sign(whole.beta_tilde, setup.beta);

    const DebiasedEstimate est = swap_estimate(inst, cfg.tuning, setup.sigma, split);
    rec.s_hat = est.s_hat;
    // beta_swap carries the sign of the first-round TWF output.
    const SignalVector star = align_sign(est.beta_tilde1, setup.beta);

    const double root_n = std::sqrt(static_cast<double>(est.n_half));
    rec.errors_twf.resize(m);
    rec.errors_detwf.resize(m);
    rec.errors_hat1.resize(m);
    rec.std_errors.resize(m);
    rec.ci_halfwidths.resize(m);
    rec.covered.resize(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
      const Index k = coords[static_cast<std::size_t>(i)];
      // Errors are oriented along sign(beta*_k): negative means shrinkage toward zero.
      const double o_twf = star_twf[k] < 0.0 ? -1.0 : 1.0;
      const double o = star[k] < 0.0 ? -1.0 : 1.0;
      rec.errors_twf[i] = o_twf * (whole.beta_tilde[k] - star_twf[k]);
      rec.errors_detwf[i] = o * (est.beta_swap[k] - star[k]);
      rec.errors_hat1[i] = o * (est.beta_hat1[k] - star[k]);
      rec.std_errors[i] = est.sigma * std::sqrt(est.combined_tau_sq(k)) / root_n;
      const Interval ci = coordinate_ci(est, k, cfg.alpha);
      rec.ci_halfwidths[i] = ci.half_width();
      rec.covered[static_cast<std::size_t>(i)] = ci.contains(star[k]);
    }
    return rec;
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("replication " + std::to_string(rep_id) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("replication " + std::to_string(rep_id) + ": " + e.what());
  }
}

ReplicationRecord run_replication(const ExperimentConfig& cfg, const SignalVector& beta, int rep_id) {
  cfg.validate();
  ExperimentSetup setup;
  setup.beta = beta;
  setup.sigma = cfg.sigma ? *cfg.sigma : nsr_to_sigma(*cfg.nsr, beta);
  setup.groups = select_groups(beta, cfg.group_targets);
  return run_replication(cfg, setup, rep_id);
}

std::vector<ReplicationRecord> run_experiment(const ExperimentConfig& cfg,
                                              const ExperimentSetup& setup, int threads) {
  cfg.validate();
  if (threads < 0) throw InvalidArgument("threads must be nonnegative");
  if (threads == 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, cfg.reps);

  std::vector<ReplicationRecord> records(static_cast<std::size_t>(cfg.reps));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int id = next++; id < cfg.reps; id = next++) {
      try {
        records[static_cast<std::size_t>(id)] = run_replication(cfg, setup, id);
      } catch (...) {
        failures[static_cast<std::size_t>(id)] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  // Report the lowest failing rep_id so the error is schedule-independent.
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return records;
}

ReplicationRecord with_alpha(ReplicationRecord record, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("with_alpha: alpha must lie in (0, 1)");
  const double z = normal_quantile(1.0 - 0.5 * alpha);
  record.alpha = alpha;
  for (Index i = 0; i < record.errors_detwf.size(); ++i) {
    record.ci_halfwidths[i] = z * record.std_errors[i];
    record.covered[static_cast<std::size_t>(i)] =
        std::abs(record.errors_detwf[i]) <= record.ci_halfwidths[i];
  }
  return record;
}

const char* method_name(Method m) { return m == Method::Twf ? "TWF" : "de-TWF"; }

const SummaryRow& SummaryTable::at(const std::string& group, Method method) const {
  for (const auto& r : rows) {
    if (r.group == group && r.method == method) return r;
  }
  throw InvalidArgument("summary table has no row for group '" + group + "'");
}

std::vector<double> pooled_errors(const std::vector<ReplicationRecord>& records,
                                  const TrackedCoordinates& groups, const std::string& group,
                                  Method method) {
  const auto offsets = group_offsets(groups);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].label != group) continue;
    std::vector<double> pool;
    pool.reserve(records.size() * groups[g].coords.size());
    for (const auto& r : records) {
      const Vector& e = method_errors(r, method);
      for (std::size_t i = 0; i < groups[g].coords.size(); ++i) {
        pool.push_back(e[static_cast<Index>(offsets[g] + i)]);
      }
    }
    return pool;
  }
  throw InvalidArgument("unknown group '" + group + "'");
}

SummaryTable summarize(const std::vector<ReplicationRecord>& records,
                       const TrackedCoordinates& groups) {
  if (records.empty()) throw InvalidArgument("summarize: no replication records");
  SummaryTable table;
  for (const auto& g : groups) {
    for (Method m : {Method::Twf, Method::DeTwf}) {
      const std::vector<double> pool = pooled_errors(records, groups, g.label, m);
      SummaryRow row;
      row.group = g.label;
      row.method = m;
      row.n_pool = pool.size();
      if (pool.empty()) throw InvalidArgument("summarize: group '" + g.label + "' is empty");
      const double count = static_cast<double>(pool.size());
      double mean = 0.0;
      for (double x : pool) mean += x;
      mean /= count;
      row.bias = mean;
      if (pool.size() > 1) {
        double ss = 0.0;
        for (double x : pool) ss += (x - mean) * (x - mean);
        row.sd = std::sqrt(ss / (count - 1.0));
      } else {
        row.sd = 0.0;
        row.sd_defined = false;
      }
      row.mae = median_abs(pool);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::vector<CoverageRow> coverage_table(const std::vector<ReplicationRecord>& records,
                                        const TrackedCoordinates& groups) {
  if (records.empty()) throw InvalidArgument("coverage_table: no replication records");
  const double alpha = records.front().alpha;
  const auto offsets = group_offsets(groups);
  std::vector<CoverageRow> rows;
  auto tally = [&](const std::string& label, std::size_t begin, std::size_t end) {
    std::size_t hit = 0;
    std::size_t total = 0;
    for (const auto& r : records) {
      for (std::size_t i = begin; i < end; ++i) {
        hit += r.covered.at(i) ? 1 : 0;
        ++total;
      }
    }
    CoverageRow row{label, total ? 100.0 * static_cast<double>(hit) / static_cast<double>(total) : 0.0,
                    total, alpha};
    rows.push_back(std::move(row));
  };
  tally("all", 0, flatten(groups).size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    tally(groups[g].label, offsets[g], offsets[g] + groups[g].coords.size());
  }
  return rows;
}

std::vector<HistogramBin> histogram_bins(const std::vector<double>& errors, int bin_count) {
  if (errors.empty()) throw InvalidArgument("histogram_bins: no errors to bin");
  if (bin_count < 1) throw InvalidArgument("histogram_bins: bin_count must be positive");
  const auto [mn, mx] = std::minmax_element(errors.begin(), errors.end());
  const double lo = *mn;
  double hi = *mx;
  if (!(hi > lo)) hi = lo + 1e-12;
  const double width = (hi - lo) / bin_count;

  std::vector<HistogramBin> bins(static_cast<std::size_t>(bin_count));
  for (int b = 0; b < bin_count; ++b) {
    bins[static_cast<std::size_t>(b)].lo = lo + b * width;
    bins[static_cast<std::size_t>(b)].hi = b + 1 == bin_count ? hi : lo + (b + 1) * width;
  }
  for (double x : errors) {
    auto b = static_cast<long>(std::floor((x - lo) / width));
    b = std::clamp(b, 0L, static_cast<long>(bin_count - 1));
    ++bins[static_cast<std::size_t>(b)].count;
  }
  return bins;
}

std::vector<HistogramRow> histogram_table(const std::vector<ReplicationRecord>& records,
                                          const TrackedCoordinates& groups, int bin_count) {
  if (records.empty()) throw InvalidArgument("histogram_table: no replication records");
  std::vector<HistogramRow> rows;
  for (const auto& g : groups) {
    for (Method m : {Method::Twf, Method::DeTwf}) {
      for (const auto& bin : histogram_bins(pooled_errors(records, groups, g.label, m), bin_count)) {
        rows.push_back({g.label, m, bin});
      }
    }
  }
  return rows;
}

}  // namespace sparsepr
