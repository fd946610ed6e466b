#include <doctest.h>

#include "oracles.hpp"

#include <mobw/errors.hpp>
#include <mobw/samplers.hpp>

#include <cmath>
#include <numeric>

using namespace mobw;

namespace {

using testing::kFiveCauses;
using testing::kFiveTimes;

// Direct transcription of the shape marginal without the log-sum-exp rewrite.
double naive_marginal(double alpha, const std::vector<double>& t, double c1, double c2, double a, double b) {
  const double n = static_cast<double>(t.size());
  double s = 0.0, logs = 0.0;
  for (double x : t) {
    s += std::pow(x, alpha);
    logs += std::log(x);
  }
  return std::pow(alpha, n + c2 - 1.0) * std::exp(-c1 * alpha + (alpha - 1.0) * logs) *
         std::pow(b + s, -(a + n));
}

std::vector<double> alpha_draws(const WeightedSample& s) { return s.values(Parameter::Alpha); }

}  // namespace

TEST_CASE("shape marginal is log-concave for every scheme") {
  const PriorSpec p = PriorSpec::noninformative();
  for (const auto& d : testing::log_concavity_datasets()) {
    REQUIRE(d.stats().n_star > 0);
    CHECK(testing::max_second_difference(ShapeMarginal(d, p)) <= 1e-8);
  }
}

TEST_CASE("single unit-time observation reduces the marginal") {
  const auto d = testing::complete_dataset({1.0}, {1});
  const PriorSpec p(GDParams(2.0, 1.5, 1, 1, 1), 2.0, 7.0);
  for (double a : {0.3, 1.0, 2.5, 6.0}) {
    const double reduced = -2.0 * a + 7.0 * std::log(a) - 3.0 * std::log(2.5);
    CHECK(log_alpha_marginal(a, d, p) == doctest::Approx(reduced).epsilon(1e-13));
  }
  const ShapeMarginal f(d, p);
  CHECK(locate_mode([&](double a) { return f(a); }) == doctest::Approx(3.5).epsilon(1e-6));
  CHECK_THROWS_AS(log_alpha_marginal(0.0, d, p), DomainError);
}

TEST_CASE("normalized marginal matches a quadrature oracle") {
  const auto d = testing::complete_dataset(kFiveTimes, kFiveCauses);
  const PriorSpec p(GDParams(2.0, 1.0, 1.0, 1.5, 2.0), 0.5, 1.5);
  // library density on a grid, normalized by the trapezoid rule
  const int N = 20000;
  const double lo = 1e-4, hi = 15.0, step = (hi - lo) / N;
  std::vector<double> lib(N + 1);
  for (int i = 0; i <= N; ++i) lib[i] = log_alpha_marginal(lo + i * step, d, p);
  const double peak = *std::max_element(lib.begin(), lib.end());
  double z = 0.0;
  for (int i = 0; i <= N; ++i) {
    lib[i] = std::exp(lib[i] - peak);
    z += (i == 0 || i == N ? 0.5 : 1.0) * lib[i] * step;
  }
  auto naive = [&](double a) { return naive_marginal(a, kFiveTimes, 0.5, 1.5, 2.0, 1.0); };
  const double zn = testing::integrate(naive, 0.0, 40.0);
  double tv = 0.0;
  for (int i = 0; i <= N; ++i) {
    tv += (i == 0 || i == N ? 0.5 : 1.0) * std::abs(lib[i] / z - naive(lo + i * step) / zn) * step;
  }
  CHECK(0.5 * tv < 1e-4);
}

TEST_CASE("alpha draws follow the marginal") {
  const auto d = testing::retinopathy();
  const PriorSpec p = PriorSpec::noninformative();
  const ShapeMarginal f(d, p);
  // CDF oracle by cumulative quadrature on a fine grid
  const int N = 40000;
  const double lo = 0.5, hi = 3.0, step = (hi - lo) / N;
  std::vector<double> cdf(N + 1, 0.0);
  const double peak = f(1.55);
  for (int i = 1; i <= N; ++i) {
    const double a = lo + (i - 0.5) * step;
    cdf[i] = cdf[i - 1] + std::exp(f(a) - peak) * step;
  }
  for (auto& c : cdf) c /= cdf.back();
  auto F = [&](double a) {
    if (a <= lo) return 0.0;
    if (a >= hi) return 1.0;
    const double pos = (a - lo) / step;
    const auto i = static_cast<std::size_t>(pos);
    return cdf[i] + (pos - i) * (cdf[i + 1] - cdf[i]);
  };

  std::vector<double> ars, rou;
  for (auto method : {AlphaMethod::AdaptiveRejection, AlphaMethod::RatioOfUniforms}) {
    AlphaSampler s([&](double a) { return f(a); }, method);
    CHECK(s.method() == method);
    CHECK(s.mode() == doctest::Approx(locate_mode([&](double a) { return f(a); })));
    Rng rng(method == AlphaMethod::AdaptiveRejection ? 1 : 2);
    auto& out = method == AlphaMethod::AdaptiveRejection ? ars : rou;
    for (int i = 0; i < 100000; ++i) out.push_back(s(rng));
    auto sorted = out;
    std::sort(sorted.begin(), sorted.end());
    double D = 0.0;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double v = F(sorted[i]);
      D = std::max({D, std::abs((i + 1) / n - v), std::abs(v - i / n)});
    }
    CHECK(D < 0.006);
  }
  CHECK(testing::ks_two_sample(ars, rou) < 0.01);

  Rng rng(3);
  CHECK(sample_alpha(rng, d, p) > 0.0);
  CHECK(sample_alpha(rng, d, p, AlphaMethod::RatioOfUniforms) > 0.0);
}

TEST_CASE("degenerate single observation: empirical mode near c2/c1") {
  const auto d = testing::complete_dataset({1.0}, {2});
  const PriorSpec p(GDParams(0.001, 0.001, 1, 1, 1), 10.0, 50.0);
  Rng rng(8);
  ShapeMarginal f(d, p);
  AlphaSampler s([&](double a) { return f(a); }, AlphaMethod::AdaptiveRejection);
  std::vector<double> x(100000);
  for (auto& v : x) v = s(rng);
  // Gaussian kernel density estimate on a grid
  const double bw = 1.06 * testing::sd(x) * std::pow(x.size(), -0.2);
  double best = 0.0, best_at = 0.0;
  for (double g = 3.0; g <= 7.0; g += 0.01) {
    double k = 0.0;
    for (double v : x) k += std::exp(-0.5 * (v - g) * (v - g) / (bw * bw));
    if (k > best) {
      best = k;
      best_at = g;
    }
  }
  CHECK(std::abs(best_at / 5.0 - 1.0) < 0.05);
}

TEST_CASE("conditional scale draws have the GD moments") {
  const auto d = testing::retinopathy();
  const PriorSpec p = PriorSpec::noninformative();
  const double alpha = 1.4;
  const GDParams g = conditional_scale_params(d, p, alpha, false);
  double D = 0.0;
  for (const auto& o : d.observations()) D += std::pow(o.time, alpha);
  const double n = 71, ai[3] = {1, 1, 1}, ni[3] = {10, 28, 33};
  CHECK(g.b == doctest::Approx(0.001 + D).epsilon(1e-12));
  Rng rng(12);
  const int M = 200000;
  std::array<double, 3> s{}, s2{};
  for (int i = 0; i < M; ++i) {
    const auto t = sample_gd(rng, g);
    const double v[3] = {t.lambda0, t.lambda1, t.lambda2};
    for (int k = 0; k < 3; ++k) {
      s[k] += v[k];
      s2[k] += v[k] * v[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double expected = (0.001 + n) / (0.001 + D) * (ai[k] + ni[k]) / (3.0 + n);
    const double m = s[k] / M;
    const double se = std::sqrt((s2[k] / M - m * m) / M);
    CHECK(std::abs(m - expected) < 3.0 * se);
  }
  const GDParams r = conditional_scale_params(d, p, alpha, true);
  CHECK(r.a0 == 1.0 + 20.0);
  CHECK(r.a1 == 1.0 + 61.0);
  CHECK(r.a2 == 1.0 + 61.0);
}

TEST_CASE("composition sampling matches a 4-D grid posterior") {
  const auto d = testing::complete_dataset(kFiveTimes, kFiveCauses);
  const PriorSpec p(GDParams(5.0, 2.0, 1.0, 1.5, 2.0), 1.0, 2.0);

  const auto oracle = testing::grid_posterior_means(kFiveTimes, kFiveCauses, p);
  Rng rng(2024);
  const auto s = sample_posterior_unrestricted(rng, d, p, 400000);
  CHECK(s.weights.front() == doctest::Approx(1.0 / 400000));
  for (Parameter q : kAllParameters) {
    const double mc = s.expectation([&](const PosteriorDraw& x) { return x.get(q); });
    INFO(parameter_name(q), " oracle=", oracle[static_cast<int>(q)], " mc=", mc);
    CHECK(std::abs(mc / oracle[static_cast<int>(q)] - 1.0) < 0.01);
  }
}

TEST_CASE("importance weights") {
  const auto none = CompetingRisksDataset({}, scheme::TypeI{0.5}, 3);
  CHECK(importance_weight({1.2, {0.3, 0.4, 0.5}}, none) == 1.0);
  const auto d = testing::complete_dataset(kFiveTimes, kFiveCauses);
  CHECK(importance_weight({1.0, {1.0, 1.0, 1.0}}, d) == doctest::Approx(std::pow(3.0, 5)));
  CHECK_THROWS_AS(importance_weight({1.0, {0.0, 1.0, 1.0}}, d), DomainError);
}

TEST_CASE("proposal density times weight is proportional to the restricted posterior") {
  const auto d = testing::retinopathy();
  const PriorSpec p(GDParams(2.0, 1.0, 1.2, 0.8, 1.7), 1.0, 1.0);
  const double alpha = 1.5;
  const GDParams proposal = conditional_scale_params(d, p, alpha, true);
  const double D = d.exposure(alpha);
  Rng rng(17);
  const auto& c = d.stats().cause_counts;
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < 100; ++i) {
    const ScaleTriple t = sample_pogd(rng, proposal);
    const double log_target = c[0] * std::log(t.lambda0) + c[1] * std::log(t.lambda1) +
                              c[2] * std::log(t.lambda2) - t.total() * D + pogd_log_pdf(t, p.gd);
    const double diff = pogd_log_pdf(t, proposal) + log_importance_weight({alpha, t}, d) - log_target;
    lo = std::min(lo, diff);
    hi = std::max(hi, diff);
  }
  CHECK(hi - lo < 1e-10);
}

TEST_CASE("restricted sampler") {
  const auto d = testing::retinopathy();
  const PriorSpec p = PriorSpec::noninformative();
  Rng rng(5);
  const auto s = sample_posterior_restricted(rng, d, p, 20000);
  CHECK(s.restricted);
  int bad = 0;
  for (const auto& x : s.draws) bad += x.scales.lambda1 > x.scales.lambda2;
  CHECK(bad == 0);
  CHECK(std::accumulate(s.weights.begin(), s.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.ess > 0.0);
  CHECK(s.ess <= 20000.0);
}

TEST_CASE("restricted importance sampling matches a rejection oracle") {
  // With a1 = a2 the ordered prior is the symmetric GD prior restricted to
  // lambda1 <= lambda2, so rejection from the unrestricted posterior is exact.
  const auto d = testing::complete_dataset(testing::kTenTimes, testing::kTenCauses);
  const PriorSpec p(GDParams(1.0, 0.5, 1.0, 1.0, 1.0), 0.5, 1.0);
  Rng rng(31);
  const auto is = sample_posterior_restricted(rng, d, p, 200000);
  const auto oracle = testing::rejection_restricted_means(rng, d, p, 600000);
  for (Parameter q : kAllParameters) {
    const double est = is.expectation([&](const PosteriorDraw& x) { return x.get(q); });
    INFO(parameter_name(q), " oracle=", oracle[static_cast<int>(q)], " is=", est);
    CHECK(std::abs(est / oracle[static_cast<int>(q)] - 1.0) < 0.02);
  }
}

TEST_CASE("draws are independent") {
  const auto d = testing::retinopathy();
  Rng rng(77);
  const auto s = sample_posterior_unrestricted(rng, d, PriorSpec::noninformative(), 50000);
  const auto a = alpha_draws(s);
  const double m = testing::mean(a);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    den += (a[i] - m) * (a[i] - m);
    if (i + 1 < a.size()) num += (a[i] - m) * (a[i + 1] - m);
  }
  CHECK(std::abs(num / den) < 3.0 / std::sqrt(static_cast<double>(a.size())));
}

TEST_CASE("type2 with r = n is the complete posterior") {
  const auto full = testing::retinopathy();
  Rng crng(1);
  const auto t2 = apply_censoring(full.observations(), scheme::TypeII{71}, crng);
  const PriorSpec p = PriorSpec::noninformative();
  Rng r1(100), r2(200);
  const auto a = sample_posterior_unrestricted(r1, full, p, 100000);
  const auto b = sample_posterior_unrestricted(r2, t2, p, 100000);
  CHECK(testing::ks_two_sample(alpha_draws(a), alpha_draws(b)) < 0.01);
}

TEST_CASE("results depend on the seed but not on the worker count") {
  const auto d = testing::retinopathy();
  const PriorSpec p = PriorSpec::noninformative();
  SamplerOptions one, three;
  three.workers = 3;
  one.block = three.block = 1000;
  Rng r1(9), r2(9);
  const auto a = sample_posterior_restricted(r1, d, p, 7500, one);
  const auto b = sample_posterior_restricted(r2, d, p, 7500, three);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a.draws[i].alpha == b.draws[i].alpha && a.draws[i].scales.lambda2 == b.draws[i].scales.lambda2 &&
           a.weights[i] == b.weights[i];
  }
  CHECK(same);
}

TEST_CASE("preconditions") {
  const auto none = CompetingRisksDataset({}, scheme::TypeI{0.5}, 3);
  Rng rng(1);
  CHECK_THROWS_AS(sample_posterior_unrestricted(rng, none, PriorSpec::noninformative(), 10), ValidationError);
  const auto d = testing::complete_dataset({1.0, 2.0}, {1, 2});
  CHECK_THROWS_AS(sample_posterior_unrestricted(rng, d, PriorSpec::noninformative(), 0), ValidationError);
  CHECK_THROWS_AS(PriorSpec(GDParams(1, 1, 1, 1, 1), 0.0, 1.0), ValidationError);
  CHECK(parse_method("rou") == AlphaMethod::RatioOfUniforms);
  CHECK_THROWS_AS(parse_method("gibbs"), ValidationError);
}
