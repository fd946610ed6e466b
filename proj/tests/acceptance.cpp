// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// status if any criterion fails.

#include "oracles.hpp"

#include <mobw/inference.hpp>
#include <mobw/simulation.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

using namespace mobw;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }
bool within_rel(double x, double target, double rel) { return std::abs(x - target) <= rel * std::abs(target); }

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

constexpr std::size_t kRealDataDraws = 100000;
constexpr std::uint64_t kSeed = 20240101;

struct RealDataRun {
  EstimateReport report;
  double seconds;
};

RealDataRun real_data(const CompetingRisksDataset& d, bool restricted) {
  const PriorSpec p = PriorSpec::noninformative();
  const std::vector<double> levels{0.95};
  Rng rng = make_stream(kSeed, 0);
  const auto t0 = Clock::now();
  const WeightedSample s = restricted ? sample_posterior_restricted(rng, d, p, kRealDataDraws)
                                      : sample_posterior_unrestricted(rng, d, p, kRealDataDraws);
  EstimateReport r = summarize(s, levels);
  return {r, seconds_since(t0)};
}

StudyResult cell(MOBWParams truth, std::size_t n, bool restricted) {
  StudyConfig cfg(truth, n);
  cfg.replications = 1000;
  cfg.draws = 2000;
  cfg.levels = {0.95};
  cfg.restricted = restricted;
  cfg.master_seed = 7;
  return run_study(cfg);
}

void criterion_1(const CompetingRisksDataset& d) {
  const PriorSpec p = PriorSpec::noninformative();
  const auto t0 = Clock::now();
  const double log10_bf = log_bayes_factor(d, p, BFHyper::matching(p)) / std::log(10.0);
  const double secs = seconds_since(t0);
  report(1, within(log10_bf, 32.3667, 0.01) && secs < 1.0,
         "log10 BF = " + fmt(log10_bf) + " (target 32.3667 +- 0.01), " + fmt(secs, 3) + " s");
}

void criterion_2(const RealDataRun& u, const RealDataRun& r) {
  const std::array<double, 4> tol{0.03, 0.01, 0.02, 0.02};
  const std::array<double, 4> tu{1.5393, 0.0714, 0.1872, 0.2207};
  const std::array<double, 4> tr{1.5388, 0.0707, 0.1789, 0.2281};
  bool ok = u.seconds < 30.0 && r.seconds < 30.0;
  std::string detail;
  for (const auto& [run, target, name] : {std::tuple{&u, &tu, "unrestricted"}, std::tuple{&r, &tr, "restricted"}}) {
    detail += std::string(name) + " (";
    for (Parameter q : kAllParameters) {
      const auto i = static_cast<std::size_t>(q);
      const double m = run->report.mean(q);
      ok = ok && within(m, (*target)[i], tol[i]);
      detail += fmt(m) + (i < 3 ? ", " : "");
    }
    detail += ") " + fmt(run->seconds, 2) + " s; ";
  }
  report(2, ok, detail + "M = 100000");
}

void criterion_3(const RealDataRun& u, const RealDataRun& r) {
  const auto& cu = u.report.at(Parameter::Alpha).interval(0.95, IntervalKind::HPD);
  const auto& cr = r.report.at(Parameter::Alpha).interval(0.95, IntervalKind::HPD);
  const bool ok = within(cu.lower, 1.2167, 0.03) && within(cu.upper, 1.9139, 0.03) &&
                  within(cr.lower, 1.2123, 0.03) && within(cr.upper, 1.9043, 0.03);
  report(3, ok,
         "alpha 95% HPD unrestricted (" + fmt(cu.lower) + ", " + fmt(cu.upper) +
             ") target (1.2167, 1.9139); restricted (" + fmt(cr.lower) + ", " + fmt(cr.upper) +
             ") target (1.2123, 1.9043); tolerance 0.03");
}

void criterion_4(const CompetingRisksDataset& d, const RealDataRun& u, const RealDataRun& r) {
  const auto ku = ks_test(d, [&](double t) { return fitted_min_cdf(t, u.report); });
  const auto kr = ks_test(d, [&](double t) { return fitted_min_cdf(t, r.report); });
  const PriorSpec p = PriorSpec::noninformative();
  Rng rng = make_stream(kSeed, 1);
  const PooledFit pooled = pooled_weibull_fit(d, BFHyper::matching(p), rng, kRealDataDraws);
  const auto kp = ks_test(d, [&](double t) { return fitted_min_cdf(t, pooled.alpha_star, pooled.lambda_star); });
  const bool ok = within(ku.statistic, 0.0579, 0.005) && within(ku.p_value, 0.9598, 0.02) &&
                  within(kr.statistic, 0.0572, 0.005) && within(kr.p_value, 0.9637, 0.02) &&
                  within(pooled.alpha_star, 1.5358, 0.03) && within(pooled.lambda_star, 0.4795, 0.02) &&
                  within(kp.statistic, 0.0582, 0.005);
  report(4, ok,
         "KS unrestricted D=" + fmt(ku.statistic) + " p=" + fmt(ku.p_value) + "; restricted D=" +
             fmt(kr.statistic) + " p=" + fmt(kr.p_value) + "; pooled (" + fmt(pooled.alpha_star) + ", " +
             fmt(pooled.lambda_star) + ") D=" + fmt(kp.statistic));
}

void criterion_8() {
  std::ostringstream detail;
  bool ok = true;

  // (a) composition sampling against a grid posterior
  {
    const auto d = testing::complete_dataset(testing::kFiveTimes, testing::kFiveCauses);
    const PriorSpec p(GDParams(5.0, 2.0, 1.0, 1.5, 2.0), 1.0, 2.0);
    const auto oracle = testing::grid_posterior_means(testing::kFiveTimes, testing::kFiveCauses, p);
    Rng rng(2024);
    const auto s = sample_posterior_unrestricted(rng, d, p, 400000);
    double worst = 0.0;
    for (Parameter q : kAllParameters) {
      const double mc = s.expectation([&](const PosteriorDraw& x) { return x.get(q); });
      worst = std::max(worst, std::abs(mc / oracle[static_cast<int>(q)] - 1.0));
    }
    ok = ok && worst < 0.01;
    detail << "(a) max rel err " << fmt(worst, 5) << " < 0.01; ";
  }
  // (b) restricted importance sampling against rejection
  {
    const auto d = testing::complete_dataset(testing::kTenTimes, testing::kTenCauses);
    const PriorSpec p(GDParams(1.0, 0.5, 1.0, 1.0, 1.0), 0.5, 1.0);
    Rng rng(31);
    const auto is = sample_posterior_restricted(rng, d, p, 200000);
    const auto oracle = testing::rejection_restricted_means(rng, d, p, 600000);
    double worst = 0.0;
    for (Parameter q : kAllParameters) {
      const double est = is.expectation([&](const PosteriorDraw& x) { return x.get(q); });
      worst = std::max(worst, std::abs(est / oracle[static_cast<int>(q)] - 1.0));
    }
    ok = ok && worst < 0.02;
    detail << "(b) max rel err " << fmt(worst, 5) << " < 0.02; ";
  }
  // (c) log-concavity of the shape marginal
  {
    double worst = -INFINITY;
    std::size_t sets = 0;
    for (const auto& d : testing::log_concavity_datasets()) {
      worst = std::max(worst, testing::max_second_difference(ShapeMarginal(d, PriorSpec::noninformative())));
      ++sets;
    }
    ok = ok && worst <= 1e-8;
    detail << "(c) max second difference " << worst << " over " << sets << " datasets; ";
  }
  // (d) TypeII with r = n against complete data
  {
    const auto full = testing::retinopathy();
    Rng crng(1);
    const auto t2 = apply_censoring(full.observations(), scheme::TypeII{full.observed()}, crng);
    const PriorSpec p = PriorSpec::noninformative();
    Rng r1(100), r2(200);
    const auto a = sample_posterior_unrestricted(r1, full, p, 100000);
    const auto b = sample_posterior_unrestricted(r2, t2, p, 100000);
    const double ks = testing::ks_two_sample(a.values(Parameter::Alpha), b.values(Parameter::Alpha));
    ok = ok && ks < 0.01;
    detail << "(d) KS " << fmt(ks) << " < 0.01";
  }
  report(8, ok, detail.str());
}

}  // namespace

int main() {
  const auto d = testing::retinopathy();

  criterion_1(d);
  const RealDataRun u = real_data(d, false);
  const RealDataRun r = real_data(d, true);
  criterion_2(u, r);
  criterion_3(u, r);
  criterion_4(d, u, r);

  // Monte Carlo cells: Set II n=50 unrestricted; Set I n=30 restricted and unrestricted.
  const auto t0 = Clock::now();
  const StudyResult a = cell(MOBWParams(2.0, 1.0, 1.0, 1.2), 50, false);
  const StudyResult b = cell(MOBWParams(2.0, 0.5, 1.0, 1.2), 30, true);
  const double secs = seconds_since(t0);
  const StudyResult c = cell(MOBWParams(2.0, 0.5, 1.0, 1.2), 30, false);

  {
    const auto& ea = a.at(Parameter::Alpha);
    const auto& el = b.at(Parameter::Lambda1);
    const bool ok = within(ea.average_estimate, 2.018, 0.02) && within_rel(ea.mse, 0.052, 0.30) &&
                    within(el.average_estimate, 0.939, 0.02) && within_rel(el.mse, 0.066, 0.30) && secs < 600.0;
    report(5, ok,
           "n=50 l0=1.0: AE(alpha)=" + fmt(ea.average_estimate, 3) + " MSE(alpha)=" + fmt(ea.mse, 3) +
               "; n=30 l0=0.5 restricted: AE(l1)=" + fmt(el.average_estimate, 3) + " MSE(l1)=" + fmt(el.mse, 3) +
               "; 1000 replications, " + fmt(secs, 1) + " s");
  }
  {
    double lo = INFINITY, hi = -INFINITY;
    for (const StudyResult* s : {&a, &b, &c}) {
      for (const auto& iv : s->intervals) {
        lo = std::min(lo, iv.coverage_percent);
        hi = std::max(hi, iv.coverage_percent);
      }
    }
    report(6, lo >= 92.0 && hi <= 99.0,
           "95% CP range over 3 cells x 4 parameters x 2 kinds: [" + fmt(lo, 1) + ", " + fmt(hi, 1) + "] in [92, 99]");
  }
  {
    const double r1 = b.at(Parameter::Lambda1).mse, u1 = c.at(Parameter::Lambda1).mse;
    const double r2 = b.at(Parameter::Lambda2).mse, u2 = c.at(Parameter::Lambda2).mse;
    report(7, r1 <= u1 && r2 <= u2,
           "Set I n=30: MSE(l1) restricted " + fmt(r1) + " vs " + fmt(u1) + ", MSE(l2) restricted " + fmt(r2) +
               " vs " + fmt(u2));
  }
  criterion_8();

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
