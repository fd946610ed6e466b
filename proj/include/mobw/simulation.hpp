#pragma once

// Monte Carlo studies of the Bayes estimators and credible intervals: average
// estimate (AE), mean squared error (MSE), average interval length (AL) and
// coverage percentage (CP).

#include <mobw/data.hpp>
#include <mobw/distributions.hpp>
#include <mobw/inference.hpp>
#include <mobw/samplers.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mobw {

struct StudyConfig {
  MOBWParams truth;
  std::size_t n;
  CensoringScheme scheme = scheme::Complete{};
  std::size_t replications = 1000;
  std::size_t draws = 2000;  // posterior draws per replication
  std::vector<double> levels{0.95};
  bool restricted = false;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  PriorSpec prior = PriorSpec::noninformative();
  AlphaMethod method = AlphaMethod::AdaptiveRejection;

  StudyConfig(MOBWParams truth, std::size_t n) : truth(truth), n(n) {}

  void validate() const;
};

struct ReplicationRecord {
  bool failed = false;
  std::string failure;
  EstimateReport report;

  double estimate(Parameter p) const { return report.mean(p); }
  // 1 when the true value lies in the interval
  int covers(Parameter p, double truth, double level, IntervalKind kind) const;
};

// One replication: n MOBW draws, censored by cfg.scheme, then the configured
// posterior pipeline. Exceptions propagate.
ReplicationRecord run_replication(Rng& rng, const StudyConfig& cfg);

struct IntervalCell {
  Parameter parameter;
  double level;
  IntervalKind kind;
  double average_length = 0.0;
  double coverage_percent = 0.0;
};

struct ParameterCell {
  Parameter parameter;
  double truth = 0.0;
  double average_estimate = 0.0;
  double mse = 0.0;
};

struct StudyResult {
  std::size_t n = 0;
  MOBWParams truth{1.0, 1.0, 1.0, 1.0};
  bool restricted = false;
  std::size_t replications = 0;
  std::size_t failed = 0;
  std::array<ParameterCell, 4> estimates{};
  std::vector<IntervalCell> intervals;

  const ParameterCell& at(Parameter p) const { return estimates[static_cast<std::size_t>(p)]; }
  const IntervalCell& interval(Parameter p, double level, IntervalKind kind) const;
};

// Aggregates successful records (failures are excluded and counted).
StudyResult aggregate(const StudyConfig& cfg, std::span<const ReplicationRecord> records);

// Replication r uses make_stream(master_seed, r), so results do not depend on
// the number of workers. Throws StudyFailureError when 1% or more of the
// replications fail.
StudyResult run_study(const StudyConfig& cfg);

// One row per (n, lambda0, parameter).
void write_study_csv(std::ostream& os, std::span<const StudyResult> results);

}  // namespace mobw
