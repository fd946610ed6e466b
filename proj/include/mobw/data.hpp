#pragma once

#include <mobw/distributions.hpp>
#include <mobw/random.hpp>

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mobw {

namespace scheme {

struct Complete {};

// Experiment stopped at a fixed time tau.
struct TypeI {
  double tau;
};

// Experiment stopped at the r-th failure.
struct TypeII {
  std::size_t r;
};

// Stopped at min(t_r, tau).
struct HybridI {
  std::size_t r;
  double tau;
};

// Stopped at max(t_r, tau).
struct HybridII {
  std::size_t r;
  double tau;
};

// Inspection epochs tau_1 < ... < tau_k; removals R_1..R_{k-1} at the first
// k-1 epochs. All survivors are withdrawn at tau_k.
struct ProgressiveI {
  std::vector<double> epochs;
  std::vector<std::size_t> removals;
};

// R_i survivors withdrawn at the i-th failure; m + sum(R) = n.
struct ProgressiveII {
  std::vector<std::size_t> removals;
};

}  // namespace scheme

using CensoringScheme =
    std::variant<scheme::Complete, scheme::TypeI, scheme::TypeII, scheme::HybridI,
                 scheme::HybridII, scheme::ProgressiveI, scheme::ProgressiveII>;

// Canonical text form, e.g. "complete", "type2:r=10", "hybrid1:r=10,tau=2.5",
// "progressive1:tau=0.5;1;2,R=2;3", "progressive2:R=1;0;2".
std::string describe(const CensoringScheme& s);
CensoringScheme parse_scheme(std::string_view text);

void validate(const CensoringScheme& s);

// One term w * t^alpha of the exposure function.
struct ExposureTerm {
  double weight;
  double log_time;
};

// Everything a posterior computation needs from a dataset.
struct SufficientStats {
  std::size_t n_star = 0;
  std::array<std::size_t, 3> cause_counts{};  // n0, n1, n2
  double sum_log_time = 0.0;
  std::vector<ExposureTerm> exposure_terms;

  // D(alpha, tau*) = sum_j w_j * exp(alpha * log t_j)
  double exposure(double alpha) const;
};

class CompetingRisksDataset {
 public:
  // Observations are the failures actually observed (already censored);
  // `units` is the number of units put on test. Observations are sorted by
  // time with ties kept in input order. Throws ValidationError when the data
  // are inconsistent with the scheme.
  CompetingRisksDataset(std::vector<Observation> observations, CensoringScheme scheme,
                        std::size_t units, bool terminated_early = false);

  const std::vector<Observation>& observations() const noexcept { return observations_; }
  const CensoringScheme& scheme() const noexcept { return scheme_; }
  std::size_t units() const noexcept { return units_; }
  std::size_t observed() const noexcept { return observations_.size(); }
  std::size_t count(Cause c) const noexcept { return stats_.cause_counts[static_cast<int>(c)]; }
  const SufficientStats& stats() const noexcept { return stats_; }

  double exposure(double alpha) const;

  // No failures observed (possible under time censoring).
  bool degenerate() const noexcept { return observations_.empty(); }
  // Progressive Type-I run cut short because a planned removal exceeded the survivors.
  bool terminated_early() const noexcept { return terminated_early_; }
  bool is_complete() const noexcept {
    return std::holds_alternative<scheme::Complete>(scheme_);
  }

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  std::vector<Observation> observations_;
  CensoringScheme scheme_;
  std::size_t units_;
  bool terminated_early_;
  SufficientStats stats_;
  std::vector<std::string> warnings_;
};

// Reads a `time,cause` CSV (header row required). Times are divided by
// `time_divisor`. `units` is required for censored schemes other than
// progressive Type-II, where it is implied by the removal plan.
CompetingRisksDataset load_dataset(const std::filesystem::path& path, double time_divisor,
                                   const CensoringScheme& scheme,
                                   std::optional<std::size_t> units = std::nullopt);

std::vector<Observation> read_observations(const std::filesystem::path& path, double time_divisor);

void write_observations(const std::filesystem::path& path, std::span<const Observation> obs);

enum class InfeasibleRemoval { Truncate, Throw };

// The dataset an experimenter running `scheme` would observe on a complete
// sample. Random withdrawals in the progressive schemes use `rng`.
CompetingRisksDataset apply_censoring(std::span<const Observation> complete,
                                      const CensoringScheme& scheme, Rng& rng,
                                      InfeasibleRemoval policy = InfeasibleRemoval::Truncate);

}  // namespace mobw
