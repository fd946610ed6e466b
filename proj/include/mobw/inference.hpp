#pragma once

#include <mobw/data.hpp>
#include <mobw/samplers.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mobw {

enum class IntervalKind { Symmetric, HPD };

std::string_view interval_kind_name(IntervalKind k);

struct CredibleInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;  // 1 - gamma
  IntervalKind kind = IntervalKind::Symmetric;

  double length() const noexcept { return upper - lower; }
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

// Empty `weights` means equal weights. Bounds are always sample values.
//
// Unweighted symmetric: order statistics at ranks ceil(gamma/2 * M) and
// floor((1 - gamma/2) * M). Weighted: smallest ranks whose cumulative weight
// reaches gamma/2 and 1 - gamma/2.
CredibleInterval symmetric_cri(std::span<const double> values, std::span<const double> weights,
                               double gamma);

// Shortest window (v_(j), v_(j+K)), K = ceil((1 - gamma) * M), ties to the
// smallest j. Weighted: shortest (v_(j1), v_(j2)) with the weight of
// v_(j1..j2-1) at least 1 - gamma, which reduces to the unweighted rule for
// equal weights.
CredibleInterval hpd_cri(std::span<const double> values, std::span<const double> weights,
                         double gamma);

struct ParameterSummary {
  Parameter parameter = Parameter::Alpha;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<CredibleInterval> intervals;

  const CredibleInterval& interval(double level, IntervalKind kind) const;
};

struct EstimateReport {
  std::array<ParameterSummary, 4> parameters;
  std::size_t draws = 0;
  bool restricted = false;
  double ess = 0.0;
  std::uint64_t seed = 0;
  std::string scheme;

  const ParameterSummary& at(Parameter p) const {
    return parameters[static_cast<std::size_t>(p)];
  }
  double mean(Parameter p) const { return at(p).mean; }
};

// Weighted means and variances (weighted mean squared deviation).
EstimateReport point_estimates(const WeightedSample& s);

// point_estimates plus symmetric and HPD intervals at each level (1 - gamma).
// Unrestricted samples use the unweighted interval rules.
EstimateReport summarize(const WeightedSample& s, std::span<const double> levels);

struct BFHyper {
  double d1;
  double d2;
  double d3;
  double d4;

  BFHyper(double d1, double d2, double d3, double d4);
  // The choice that makes the closed form valid: d1=c1, d2=c2, d3=b, d4=a.
  static BFHyper matching(const PriorSpec& p);
};

enum class BFMode { ClosedForm, Numeric };

// ln BF = ln l_H0 - ln l_H1 for H0: lambda1 = lambda2 (pooled Weibull) against
// the full model; small values reject H0. Requires complete data.
double log_bayes_factor(const CompetingRisksDataset& d, const PriorSpec& p, const BFHyper& h,
                        BFMode mode = BFMode::ClosedForm);

// 1 - exp(-(l0 + l1 + l2) t^alpha), the law of min(X1, X2).
double fitted_min_cdf(double t, double alpha, double lambda_total);
double fitted_min_cdf(double t, const EstimateReport& report);

enum class KSPValue { Exact, Asymptotic };

struct KSResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

// P(sqrt(n) D_n > x) as n -> inf: 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
double kolmogorov_asymptotic_sf(double x);
// P(D_n >= d) for a continuous null, exact for finite n.
double kolmogorov_exact_sf(std::size_t n, double d);

// Tests the observed failure times against `cdf`. Parameters estimated from
// the same data make the nominal p-value conservative.
KSResult ks_test(const CompetingRisksDataset& d, const std::function<double(double)>& cdf,
                 KSPValue method = KSPValue::Exact);

struct PooledFit {
  double alpha_star = 0.0;
  double lambda_star = 0.0;
};

// Posterior means for the single-Weibull model T ~ W(alpha*, lambda*) with
// alpha* ~ GA(d1, d2), lambda* ~ GA(d3, d4).
PooledFit pooled_weibull_fit(const CompetingRisksDataset& d, const BFHyper& h, Rng& rng,
                             std::size_t M, const SamplerOptions& opt = {});

// E[lambda* | alpha*] = (n + d4) / (d3 + D(alpha*))
double pooled_lambda_conditional_mean(const CompetingRisksDataset& d, const BFHyper& h,
                                      double alpha_star);

}  // namespace mobw
