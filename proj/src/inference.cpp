#include <mobw/inference.hpp>

#include <mobw/errors.hpp>
#include <mobw/log_concave.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mobw {

std::string_view interval_kind_name(IntervalKind k) {
  return k == IntervalKind::Symmetric ? "symmetric" : "hpd";
}

namespace {

constexpr double kWeightTol = 1e-12;

struct Sorted {
  std::vector<double> v;
  std::vector<double> w;  // empty when unweighted
};

Sorted sort_sample(std::span<const double> values, std::span<const double> weights, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
  if (!weights.empty() && weights.size() != values.size()) {
    throw ValidationError("values and weights differ in length");
  }
  const std::size_t M = values.size();
  if (M == 0 || static_cast<double>(M) * gamma < 1.0 - 1e-9) {
    std::ostringstream msg;
    msg << "need at least 1/gamma = " << std::ceil(1.0 / gamma - 1e-9)
        << " draws for a credible interval at level " << 1.0 - gamma << ", got " << M;
    throw InsufficientSampleError(msg.str());
  }
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  Sorted s;
  s.v.reserve(M);
  for (std::size_t i : order) s.v.push_back(values[i]);
  if (!weights.empty()) {
    s.w.reserve(M);
    for (std::size_t i : order) s.w.push_back(weights[i]);
  }
  return s;
}

// index of the first cumulative weight reaching `target`
std::size_t weighted_rank(const std::vector<double>& w, double target) {
  double c = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    c += w[i];
    if (c >= target - kWeightTol) return i;
  }
  return w.size() - 1;
}

}  // namespace

CredibleInterval symmetric_cri(std::span<const double> values, std::span<const double> weights,
                               double gamma) {
  const Sorted s = sort_sample(values, weights, gamma);
  const auto M = static_cast<double>(s.v.size());
  CredibleInterval ci;
  ci.level = 1.0 - gamma;
  ci.kind = IntervalKind::Symmetric;
  if (s.w.empty()) {
    auto clamp_rank = [&](double r) {
      return static_cast<std::size_t>(std::clamp(r, 1.0, M)) - 1;
    };
    ci.lower = s.v[clamp_rank(std::ceil(gamma / 2.0 * M - 1e-9))];
    ci.upper = s.v[clamp_rank(std::floor((1.0 - gamma / 2.0) * M + 1e-9))];
  } else {
    ci.lower = s.v[weighted_rank(s.w, gamma / 2.0)];
    ci.upper = s.v[weighted_rank(s.w, 1.0 - gamma / 2.0)];
  }
  return ci;
}

CredibleInterval hpd_cri(std::span<const double> values, std::span<const double> weights,
                         double gamma) {
  const Sorted s = sort_sample(values, weights, gamma);
  const std::size_t M = s.v.size();
  CredibleInterval ci;
  ci.level = 1.0 - gamma;
  ci.kind = IntervalKind::HPD;

  std::size_t best_lo = 0;
  std::size_t best_hi = M - 1;
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](std::size_t lo, std::size_t hi) {
    const double len = s.v[hi] - s.v[lo];
    if (len < best) {
      best = len;
      best_lo = lo;
      best_hi = hi;
    }
  };

  if (s.w.empty()) {
    std::size_t K = static_cast<std::size_t>(std::ceil((1.0 - gamma) * static_cast<double>(M) - 1e-9));
    K = std::min(K, M - 1);
    for (std::size_t j = 0; j + K < M; ++j) consider(j, j + K);
  } else {
    // prefix[k] = weight of v_(0..k-1)
    std::vector<double> prefix(M + 1, 0.0);
    for (std::size_t i = 0; i < M; ++i) prefix[i + 1] = prefix[i] + s.w[i];
    const double need = 1.0 - gamma - kWeightTol;
    bool found = false;
    for (std::size_t j1 = 0; j1 + 1 < M; ++j1) {
      // smallest j2 in (j1, M-1] with prefix[j2] - prefix[j1] >= need
      const auto it = std::lower_bound(prefix.begin() + j1 + 1, prefix.begin() + M,
                                       prefix[j1] + need);
      if (it == prefix.begin() + M) break;
      consider(j1, static_cast<std::size_t>(it - prefix.begin()));
      found = true;
    }
    if (!found) {
      // Mass concentrated at the top order statistics: count both endpoints.
      for (std::size_t j1 = 0; j1 < M; ++j1) {
        const auto it = std::lower_bound(prefix.begin() + j1 + 1, prefix.end(), prefix[j1] + need);
        if (it == prefix.end()) break;
        consider(j1, static_cast<std::size_t>(it - prefix.begin()) - 1);
      }
    }
  }
  ci.lower = s.v[best_lo];
  ci.upper = s.v[best_hi];
  return ci;
}

const CredibleInterval& ParameterSummary::interval(double level, IntervalKind kind) const {
  for (const auto& ci : intervals) {
    if (ci.kind == kind && std::abs(ci.level - level) < 1e-9) return ci;
  }
  throw ValidationError("no " + std::string(interval_kind_name(kind)) +
                        " interval at the requested level");
}

EstimateReport point_estimates(const WeightedSample& s) {
  if (s.size() < 2) throw InsufficientSampleError("point estimates need at least 2 draws");
  EstimateReport r;
  r.draws = s.size();
  r.restricted = s.restricted;
  r.ess = s.ess;
  for (Parameter p : kAllParameters) {
    auto& ps = r.parameters[static_cast<std::size_t>(p)];
    ps.parameter = p;
    double mean = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) mean += s.weights[i] * s.draws[i].get(p);
    double var = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double dev = s.draws[i].get(p) - mean;
      var += s.weights[i] * dev * dev;
    }
    ps.mean = mean;
    ps.variance = var;
  }
  return r;
}

EstimateReport summarize(const WeightedSample& s, std::span<const double> levels) {
  EstimateReport r = point_estimates(s);
  const std::span<const double> w =
      s.restricted ? std::span<const double>(s.weights) : std::span<const double>();
  for (Parameter p : kAllParameters) {
    const std::vector<double> v = s.values(p);
    auto& ps = r.parameters[static_cast<std::size_t>(p)];
    for (double level : levels) {
      if (!(level > 0.0 && level < 1.0)) throw ValidationError("credible levels must lie in (0, 1)");
      ps.intervals.push_back(symmetric_cri(v, w, 1.0 - level));
      ps.intervals.push_back(hpd_cri(v, w, 1.0 - level));
    }
  }
  return r;
}

BFHyper::BFHyper(double d1_, double d2_, double d3_, double d4_) : d1(d1_), d2(d2_), d3(d3_), d4(d4_) {
  for (double v : {d1, d2, d3, d4}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("Bayes factor hyperparameters d1..d4 must be positive and finite");
    }
  }
}

BFHyper BFHyper::matching(const PriorSpec& p) { return BFHyper(p.c1, p.c2, p.gd.b, p.gd.a); }

namespace {

bool close(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); }

// log of the integral over (0, inf) of exp(f), f log-concave
double log_integral(const ShapeMarginal& f) {
  const LogDensity g = [&f](double a) { return f(a); };
  const double mode = locate_mode(g);
  const double peak = f(mode);
  // Cut where the integrand has dropped by e^-60; log-concavity bounds the tails.
  auto edge = [&](double direction) {
    double step = 0.1 * mode;
    double x = mode + direction * step;
    while (x > 0.0 && f(x) - peak > -60.0) {
      step *= 2.0;
      x = mode + direction * step;
    }
    return std::max(x, 0.0);
  };
  const double lo = edge(-1.0);
  const double hi = edge(1.0);
  auto integrand = [&](double a) { return a > 0.0 ? std::exp(f(a) - peak) : 0.0; };
  using boost::math::quadrature::gauss_kronrod;
  const double left = gauss_kronrod<double, 61>::integrate(integrand, lo, mode, 20, 1e-13);
  const double right = gauss_kronrod<double, 61>::integrate(integrand, mode, hi, 20, 1e-13);
  return peak + std::log(left + right);
}

}  // namespace

double log_bayes_factor(const CompetingRisksDataset& d, const PriorSpec& p, const BFHyper& h,
                        BFMode mode) {
  if (!d.is_complete()) throw ValidationError("the Bayes factor test requires complete data");
  const auto& st = d.stats();
  const double n = static_cast<double>(st.n_star);
  const auto& g = p.gd;
  const std::array<double, 3> ai{g.a0, g.a1, g.a2};
  double scale_terms = std::lgamma(g.abar() + n) - std::lgamma(g.abar());
  for (int i = 0; i < 3; ++i) {
    scale_terms += std::lgamma(ai[i]) - std::lgamma(ai[i] + static_cast<double>(st.cause_counts[i]));
  }

  if (mode == BFMode::ClosedForm) {
    if (!close(h.d1, p.c1) || !close(h.d2, p.c2) || !close(h.d3, g.b) || !close(h.d4, g.a)) {
      throw HyperMismatchError(
          "closed-form Bayes factor needs d1=c1, d2=c2, d3=b, d4=a; use the numeric mode "
          "for other hyperparameters");
    }
    return scale_terms;
  }

  if (st.n_star == 0) throw ValidationError("the Bayes factor test needs at least one failure");
  const double log_i0 = log_integral(ShapeMarginal(st, h.d1, h.d2, h.d4, h.d3));
  const double log_i1 = log_integral(ShapeMarginal(st, p.c1, p.c2, g.a, g.b));
  const double log_h0 = std::lgamma(n + h.d4) + h.d2 * std::log(h.d1) + h.d4 * std::log(h.d3) -
                        std::lgamma(h.d2) - std::lgamma(h.d4) + log_i0;
  const double log_h1 = p.c2 * std::log(p.c1) - std::lgamma(p.c2) + log_i1 + std::lgamma(g.a + n) +
                        g.a * std::log(g.b) - std::lgamma(g.a) - scale_terms;
  return log_h0 - log_h1;
}

double fitted_min_cdf(double t, double alpha, double lambda_total) {
  if (!(t >= 0.0)) throw DomainError("fitted_min_cdf: t must be >= 0");
  if (t == 0.0) return 0.0;
  return -std::expm1(-lambda_total * std::exp(alpha * std::log(t)));
}

double fitted_min_cdf(double t, const EstimateReport& r) {
  return fitted_min_cdf(t, r.mean(Parameter::Alpha),
                        r.mean(Parameter::Lambda0) + r.mean(Parameter::Lambda1) +
                            r.mean(Parameter::Lambda2));
}

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  std::vector<double> t(sample.begin(), sample.end());
  if (t.empty()) throw ValidationError("KS statistic needs at least one observation");
  std::sort(t.begin(), t.end());
  const auto n = static_cast<double>(t.size());
  double D = 0.0;
  std::size_t i = 0;
  while (i < t.size()) {
    std::size_t j = i;
    while (j < t.size() && t[j] == t[i]) ++j;  // ties form one jump
    const double F = cdf(t[i]);
    const double before = static_cast<double>(i) / n;
    const double after = static_cast<double>(j) / n;
    D = std::max({D, std::abs(after - F), std::abs(F - before)});
    i = j;
  }
  return D;
}

double kolmogorov_asymptotic_sf(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.0) {
    // Jacobi-transformed series converges fast for small x.
    constexpr double kPi = 3.14159265358979323846;
    double s = 0.0;
    for (int k = 1; k < 50; ++k) {
      const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * kPi * kPi / (8.0 * x * x));
      s += term;
      if (term < 1e-16 * s) break;
    }
    return 1.0 - std::sqrt(2.0 * kPi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

// Marsaglia, Tsang & Wang (2003): P(D_n < d) via the n-th power of an m x m
// matrix, with a separate base-10 exponent to avoid overflow.
struct ScaledMatrix {
  std::size_t m;
  std::vector<double> a;
  int exponent = 0;
};

ScaledMatrix multiply(const ScaledMatrix& x, const ScaledMatrix& y) {
  const std::size_t m = x.m;
  ScaledMatrix z{m, std::vector<double>(m * m, 0.0), x.exponent + y.exponent};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double xik = x.a[i * m + k];
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) z.a[i * m + j] += xik * y.a[k * m + j];
    }
  }
  return z;
}

void rescale(ScaledMatrix& z) {
  const std::size_t c = (z.m / 2) * z.m + z.m / 2;
  if (z.a[c] > 1e140) {
    for (double& v : z.a) v *= 1e-140;
    z.exponent += 140;
  }
}

ScaledMatrix power(const ScaledMatrix& h, std::size_t n) {
  if (n == 1) return h;
  ScaledMatrix half = power(h, n / 2);
  ScaledMatrix r = multiply(half, half);
  if (n % 2 == 1) r = multiply(h, r);
  rescale(r);
  return r;
}

double kolmogorov_exact_cdf(std::size_t n, double d) {
  const double nd = static_cast<double>(n) * d;
  const auto k = static_cast<std::size_t>(nd) + 1;
  const std::size_t m = 2 * k - 1;
  const double h = static_cast<double>(k) - nd;
  ScaledMatrix H{m, std::vector<double>(m * m, 0.0), 0};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) H.a[i * m + j] = (i + 1 >= j) ? 1.0 : 0.0;
  }
  for (std::size_t i = 0; i < m; ++i) {
    H.a[i * m] -= std::pow(h, static_cast<double>(i + 1));
    H.a[(m - 1) * m + i] -= std::pow(h, static_cast<double>(m - i));
  }
  H.a[(m - 1) * m] += (2.0 * h - 1.0 > 0.0) ? std::pow(2.0 * h - 1.0, static_cast<double>(m)) : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i + 1 > j) {
        for (std::size_t g = 1; g <= i + 1 - j; ++g) H.a[i * m + j] /= static_cast<double>(g);
      }
    }
  }
  ScaledMatrix Q = power(H, n);
  double s = Q.a[(k - 1) * m + (k - 1)];
  int e = Q.exponent;
  for (std::size_t i = 1; i <= n; ++i) {
    s = s * static_cast<double>(i) / static_cast<double>(n);
    if (s < 1e-140) {
      s *= 1e140;
      e -= 140;
    }
  }
  return s * std::pow(10.0, e);
}

}  // namespace

double kolmogorov_exact_sf(std::size_t n, double d) {
  if (n == 0) throw ValidationError("KS p-value needs n >= 1");
  if (!(d > 0.0)) return 1.0;
  if (d >= 1.0) return 0.0;
  const double nd = static_cast<double>(n) * d;
  // Far tail or very large matrices: the limiting law is accurate there.
  if (nd * d > 18.0 || nd > 2000.0) return kolmogorov_asymptotic_sf(std::sqrt(static_cast<double>(n)) * d);
  return std::clamp(1.0 - kolmogorov_exact_cdf(n, d), 0.0, 1.0);
}

KSResult ks_test(const CompetingRisksDataset& d, const std::function<double(double)>& cdf,
                 KSPValue method) {
  std::vector<double> t;
  t.reserve(d.observed());
  for (const auto& o : d.observations()) t.push_back(o.time);
  KSResult r;
  r.statistic = ks_statistic(t, cdf);
  r.p_value = method == KSPValue::Exact
                  ? kolmogorov_exact_sf(t.size(), r.statistic)
                  : kolmogorov_asymptotic_sf(std::sqrt(static_cast<double>(t.size())) * r.statistic);
  return r;
}

double pooled_lambda_conditional_mean(const CompetingRisksDataset& d, const BFHyper& h,
                                      double alpha_star) {
  const ShapeMarginal m(d.stats(), h.d1, h.d2, h.d4, h.d3);
  return (static_cast<double>(d.stats().n_star) + h.d4) * std::exp(-m.log_rate(alpha_star));
}

PooledFit pooled_weibull_fit(const CompetingRisksDataset& d, const BFHyper& h, Rng& rng,
                             std::size_t M, const SamplerOptions& opt) {
  if (M == 0) throw ValidationError("number of draws must be >= 1");
  if (d.stats().n_star == 0) throw ValidationError("pooled fit needs at least one failure");
  const ShapeMarginal marginal(d.stats(), h.d1, h.d2, h.d4, h.d3);
  const AlphaSampler base([marginal](double a) { return marginal(a); }, opt.method);
  const std::uint64_t master = rng();
  const double shape = static_cast<double>(d.stats().n_star) + h.d4;

  std::vector<double> alpha(M);
  std::vector<double> lambda(M);
  for_each_block(M, opt.block, opt.workers, master, [&](std::size_t b, std::size_t e, Rng& r) {
    AlphaSampler sampler = base;
    for (std::size_t i = b; i < e; ++i) {
      alpha[i] = sampler(r);
      lambda[i] = std::exp(log_gamma_variate(r, shape) - marginal.log_rate(alpha[i]));
    }
  });
  const double inv = 1.0 / static_cast<double>(M);
  return {std::accumulate(alpha.begin(), alpha.end(), 0.0) * inv,
          std::accumulate(lambda.begin(), lambda.end(), 0.0) * inv};
}

}  // namespace mobw
