#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsepr/inference.hpp"
#include "sparsepr/model.hpp"
#include "sparsepr/twf.hpp"

namespace sparsepr {

/// A group of tracked coordinates: `count` support entries with |beta_k| near `target`.
struct GroupTarget {
  std::string label;
  double target = 0.0;
  int count = 0;
};

std::vector<GroupTarget> default_group_targets();

struct ExperimentConfig {
  Index p = 1000;
  Index n = 3000;  // per half; instances have 2n rows
  Index s = 50;
  std::optional<double> nsr;
  std::optional<double> sigma;
  int reps = 100;
  std::uint64_t master_seed = 0;
  TwfTuning tuning;
  double alpha = 0.05;
  std::vector<GroupTarget> group_targets = default_group_targets();
  int bins = 20;

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
};

struct TrackedGroup {
  std::string label;
  double target = 0.0;
  std::vector<Index> coords;
};

using TrackedCoordinates = std::vector<TrackedGroup>;

/// Greedy in listed order: each group takes the unused support coordinates
/// closest to its target magnitude, ties to the lower index.
TrackedCoordinates select_groups(const SignalVector& beta, const std::vector<GroupTarget>& targets);

/// Tracked coordinates flattened in group order.
std::vector<Index> flatten(const TrackedCoordinates& groups);

/// Per-replication outcomes over the flattened tracked coordinates. Errors are
/// sign(beta*_k) * (estimate_k - beta*_k), so shrinkage shows up as negative bias
/// regardless of the sign of the coordinate.
struct ReplicationRecord {
  int rep_id = 0;
  Vector errors_twf;     // full-data TWF
  Vector errors_detwf;   // beta_swap
  Vector errors_hat1;    // first-round debiased estimate
  Vector std_errors;     // sigma sqrt(combined tau^2 / n)
  Vector ci_halfwidths;
  std::vector<bool> covered;
  double alpha = 0.0;
  int twf_iterations = 0;
  Index s_hat = 0;
};

/// Everything fixed across replications of one setting.
struct ExperimentSetup {
  SignalVector beta;
  double sigma = 0.0;
  TrackedCoordinates groups;
};

/// Draws beta from the master seed, resolves sigma and picks tracked coordinates.
ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

ReplicationRecord run_replication(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                  int rep_id);
ReplicationRecord run_replication(const ExperimentConfig& cfg, const SignalVector& beta, int rep_id);

/// Runs cfg.reps replications on `threads` workers (0 = hardware concurrency).
/// The result is in rep_id order and independent of the thread count.
std::vector<ReplicationRecord> run_experiment(const ExperimentConfig& cfg,
                                              const ExperimentSetup& setup, int threads);

/// Coverage flags recomputed at another level from the stored errors and standard errors.
ReplicationRecord with_alpha(ReplicationRecord record, double alpha);

enum class Method { Twf, DeTwf };
const char* method_name(Method m);

struct SummaryRow {
  std::string group;
  Method method = Method::Twf;
  double bias = 0.0;
  double sd = 0.0;
  double mae = 0.0;
  std::size_t n_pool = 0;
  bool sd_defined = true;  // false for a single-observation pool (sd reported as 0)
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  const SummaryRow& at(const std::string& group, Method method) const;
};

/// Pooled errors for one group and method, in (rep, coordinate) order.
std::vector<double> pooled_errors(const std::vector<ReplicationRecord>& records,
                                  const TrackedCoordinates& groups, const std::string& group,
                                  Method method);

SummaryTable summarize(const std::vector<ReplicationRecord>& records,
                       const TrackedCoordinates& groups);

struct CoverageRow {
  std::string group;  // "all" for the pooled row
  double coverage_pct = 0.0;
  std::size_t n_pool = 0;
  double alpha = 0.0;
};

std::vector<CoverageRow> coverage_table(const std::vector<ReplicationRecord>& records,
                                        const TrackedCoordinates& groups);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max]; the last bin is closed on the right.
std::vector<HistogramBin> histogram_bins(const std::vector<double>& errors, int bin_count);

struct HistogramRow {
  std::string group;
  Method method = Method::Twf;
  HistogramBin bin;
};

std::vector<HistogramRow> histogram_table(const std::vector<ReplicationRecord>& records,
                                          const TrackedCoordinates& groups, int bin_count);

}  // namespace sparsepr
