#pragma once

// Posterior simulation for the MOBW competing-risks model.
//
// Given alpha the scale triple is conjugate (Gamma-Dirichlet), so the joint
// posterior factors as pi(alpha) * pi(lambda | alpha) and draws are exact and
// iid: no burn-in or thinning applies.

#include <mobw/data.hpp>
#include <mobw/distributions.hpp>
#include <mobw/log_concave.hpp>
#include <mobw/random.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mobw {

// GD prior on the scales and alpha ~ Gamma(c1 rate, c2 shape), written GA(c1, c2).
struct PriorSpec {
  GDParams gd;
  double c1;
  double c2;

  PriorSpec(GDParams gd, double c1, double c2);

  // a = b = c1 = c2 = 0.001, a0 = a1 = a2 = 1
  static PriorSpec noninformative();
};

enum class Parameter { Alpha, Lambda0, Lambda1, Lambda2 };

inline constexpr std::array<Parameter, 4> kAllParameters{Parameter::Alpha, Parameter::Lambda0,
                                                         Parameter::Lambda1, Parameter::Lambda2};

std::string_view parameter_name(Parameter p);

struct PosteriorDraw {
  double alpha = 0.0;
  ScaleTriple scales;

  double get(Parameter p) const;
};

struct WeightedSample {
  std::vector<PosteriorDraw> draws;
  std::vector<double> weights;  // sum to 1
  bool restricted = false;
  double ess = 0.0;             // 1 / sum(w^2)
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return draws.size(); }
  std::vector<double> values(Parameter p) const;
  // sum_i w_i g(draw_i), for any caller-supplied estimand g
  double expectation(const std::function<double(const PosteriorDraw&)>& g) const;
};

// Log density of the shape marginal, up to a constant:
//   -c1*alpha + (n + c2 - 1) log alpha - (a + n) log(b + D(alpha)) + (alpha - 1) sum log t
// The pooled Weibull model has the same form with its own hyperparameters.
struct ShapeMarginal {
  SufficientStats stats;
  double c1;
  double c2;
  double a;
  double b;

  ShapeMarginal(SufficientStats stats, double c1, double c2, double a, double b);
  ShapeMarginal(const CompetingRisksDataset& d, const PriorSpec& p);

  double operator()(double alpha) const;
  // log(b + D(alpha)) without overflow for large alpha
  double log_rate(double alpha) const;
};

double log_alpha_marginal(double alpha, const CompetingRisksDataset& d, const PriorSpec& p);

enum class AlphaMethod { AdaptiveRejection, RatioOfUniforms };

std::string_view method_name(AlphaMethod m);
AlphaMethod parse_method(std::string_view text);

// Exact sampler for a log-concave shape density. Copies share no mutable
// state, so each thread should own one.
class AlphaSampler {
 public:
  AlphaSampler(LogDensity log_density, AlphaMethod method);

  double operator()(Rng& rng);
  double mode() const;
  AlphaMethod method() const noexcept;

 private:
  std::variant<AdaptiveRejectionSampler, RatioOfUniformsSampler> impl_;
};

double sample_alpha(Rng& rng, const CompetingRisksDataset& d, const PriorSpec& p,
                    AlphaMethod method = AlphaMethod::AdaptiveRejection);

// Parameters of the scale law given alpha: GD(a+n, b+D, a0+n0, a1+n1, a2+n2)
// for the unrestricted posterior, and the POGD importance proposal
// (a+n, b+D, a0+2n0, a1+n1+n2, a2+n1+n2) for the restricted one.
GDParams conditional_scale_params(const CompetingRisksDataset& d, const PriorSpec& p, double alpha,
                                  bool restricted);

struct SamplerOptions {
  AlphaMethod method = AlphaMethod::AdaptiveRejection;
  unsigned workers = 1;
  // Draws are generated in blocks with their own random streams, so results
  // depend on the seed and block size but not on `workers`.
  std::size_t block = 4096;
};

WeightedSample sample_posterior_unrestricted(Rng& rng, const CompetingRisksDataset& d,
                                             const PriorSpec& p, std::size_t M,
                                             const SamplerOptions& opt = {});

// Order-restricted posterior (lambda1 <= lambda2) by self-normalized importance
// sampling from the POGD proposal.
WeightedSample sample_posterior_restricted(Rng& rng, const CompetingRisksDataset& d,
                                           const PriorSpec& p, std::size_t M,
                                           const SamplerOptions& opt = {});

// log h = n log(lambda) - n0 log(lambda0) - n2 log(lambda1) - n1 log(lambda2)
double log_importance_weight(const PosteriorDraw& draw, const CompetingRisksDataset& d);
double importance_weight(const PosteriorDraw& draw, const CompetingRisksDataset& d);

// Runs `fill(begin, end, rng)` over [0, M) in fixed-size blocks, block k using
// make_stream(master, k), on up to `workers` threads.
void for_each_block(std::size_t M, std::size_t block, unsigned workers, std::uint64_t master,
                    const std::function<void(std::size_t, std::size_t, Rng&)>& fill);

}  // namespace mobw
