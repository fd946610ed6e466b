#include <mobw/distributions.hpp>

#include <mobw/errors.hpp>
#include <mobw/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace mobw {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(name) + " must be a positive finite number, got " +
                          std::to_string(v));
  }
}

// log(lambda * t^alpha) for t > 0
double log_cumulative_hazard(double log_t, double shape, double scale) {
  return std::log(scale) + shape * log_t;
}

double log_weibull_pdf_unchecked(double t, double shape, double scale) {
  const double log_t = std::log(t);
  return std::log(shape) + std::log(scale) + (shape - 1.0) * log_t -
         std::exp(log_cumulative_hazard(log_t, shape, scale));
}

// -lambda * x^alpha with x >= 0
double log_weibull_surv_unchecked(double x, double shape, double scale) {
  if (x == 0.0) return 0.0;
  return -std::exp(log_cumulative_hazard(std::log(x), shape, scale));
}

}  // namespace

WeibullParams::WeibullParams(double shape_, double scale_) : shape(shape_), scale(scale_) {
  require_positive(shape, "Weibull shape");
  require_positive(scale, "Weibull scale");
}

MOBWParams::MOBWParams(double shape_, double l0, double l1, double l2)
    : shape(shape_), lambda0(l0), lambda1(l1), lambda2(l2) {
  require_positive(shape, "MOBW shape");
  require_positive(lambda0, "lambda0");
  require_positive(lambda1, "lambda1");
  require_positive(lambda2, "lambda2");
}

GDParams::GDParams(double a_, double b_, double a0_, double a1_, double a2_)
    : a(a_), b(b_), a0(a0_), a1(a1_), a2(a2_) {
  require_positive(a, "GD a");
  require_positive(b, "GD b");
  require_positive(a0, "GD a0");
  require_positive(a1, "GD a1");
  require_positive(a2, "GD a2");
}

double weibull_log_pdf(double t, const WeibullParams& p) {
  if (!(t > 0.0)) throw DomainError("weibull_log_pdf: t must be > 0");
  return log_weibull_pdf_unchecked(t, p.shape, p.scale);
}

double weibull_survival(double t, const WeibullParams& p) {
  if (!(t >= 0.0)) throw DomainError("weibull_survival: t must be >= 0");
  return std::exp(log_weibull_surv_unchecked(t, p.shape, p.scale));
}

double mobw_log_surv(double x1, double x2, const MOBWParams& p) {
  if (!(x1 >= 0.0) || !(x2 >= 0.0)) throw DomainError("mobw_log_surv: arguments must be >= 0");
  const double a = p.shape;
  if (x1 < x2) {
    return log_weibull_surv_unchecked(x1, a, p.lambda1) +
           log_weibull_surv_unchecked(x2, a, p.lambda0 + p.lambda2);
  }
  if (x1 > x2) {
    return log_weibull_surv_unchecked(x1, a, p.lambda0 + p.lambda1) +
           log_weibull_surv_unchecked(x2, a, p.lambda2);
  }
  return log_weibull_surv_unchecked(x1, a, p.lambda_total());
}

double mobw_log_density(double x1, double x2, const MOBWParams& p) {
  if (!(x1 > 0.0) || !(x2 > 0.0)) throw DomainError("mobw_log_density: arguments must be > 0");
  const double a = p.shape;
  if (x1 < x2) {
    return log_weibull_pdf_unchecked(x1, a, p.lambda1) +
           log_weibull_pdf_unchecked(x2, a, p.lambda0 + p.lambda2);
  }
  if (x1 > x2) {
    return log_weibull_pdf_unchecked(x1, a, p.lambda0 + p.lambda1) +
           log_weibull_pdf_unchecked(x2, a, p.lambda2);
  }
  return std::log(p.lambda0 / p.lambda_total()) +
         log_weibull_pdf_unchecked(x1, a, p.lambda_total());
}

Observation sample_mobw(Rng& rng, const MOBWParams& p) {
  // log U_i = (log E_i - log lambda_i) / alpha with E_i standard exponential
  auto log_draw = [&](double lambda) {
    return (std::log(standard_exponential(rng)) - std::log(lambda)) / p.shape;
  };
  const double u0 = log_draw(p.lambda0);
  const double u1 = log_draw(p.lambda1);
  const double u2 = log_draw(p.lambda2);

  if (u0 <= u1 && u0 <= u2) return {std::exp(u0), Cause::Both};
  if (u1 <= u2) return {std::exp(u1), Cause::First};
  return {std::exp(u2), Cause::Second};
}

ScaleTriple sample_gd(Rng& rng, const GDParams& g) {
  const double log_total = log_gamma_variate(rng, g.a) - std::log(g.b);
  const double g0 = log_gamma_variate(rng, g.a0);
  const double g1 = log_gamma_variate(rng, g.a1);
  const double g2 = log_gamma_variate(rng, g.a2);
  const double log_norm = log_sum_exp({g0, g1, g2});
  return {std::exp(log_total + g0 - log_norm), std::exp(log_total + g1 - log_norm),
          std::exp(log_total + g2 - log_norm)};
}

ScaleTriple sample_pogd(Rng& rng, const GDParams& g) {
  ScaleTriple t = sample_gd(rng, g);
  if (t.lambda1 > t.lambda2) std::swap(t.lambda1, t.lambda2);
  return t;
}

namespace {

void check_triple(const ScaleTriple& t, const char* who) {
  if (!(t.lambda0 > 0.0) || !(t.lambda1 > 0.0) || !(t.lambda2 > 0.0)) {
    throw DomainError(std::string(who) + ": all scale components must be > 0");
  }
}

// log of Gamma(abar)/Gamma(a) * (b*lambda)^(a-abar) * prod b^{a_i}/Gamma(a_i) * exp(-b*lambda)
double gd_common_log_terms(const ScaleTriple& t, const GDParams& g) {
  const double abar = g.abar();
  const double log_b = std::log(g.b);
  return std::lgamma(abar) - std::lgamma(g.a) + (g.a - abar) * (log_b + std::log(t.total())) +
         abar * log_b - std::lgamma(g.a0) - std::lgamma(g.a1) - std::lgamma(g.a2) -
         g.b * t.total();
}

}  // namespace

double gd_log_pdf(const ScaleTriple& t, const GDParams& g) {
  check_triple(t, "gd_log_pdf");
  return gd_common_log_terms(t, g) + (g.a0 - 1.0) * std::log(t.lambda0) +
         (g.a1 - 1.0) * std::log(t.lambda1) + (g.a2 - 1.0) * std::log(t.lambda2);
}

double pogd_log_pdf(const ScaleTriple& t, const GDParams& g) {
  check_triple(t, "pogd_log_pdf");
  if (t.lambda1 > t.lambda2) throw DomainError("pogd_log_pdf: requires lambda1 <= lambda2");
  const double l1 = std::log(t.lambda1);
  const double l2 = std::log(t.lambda2);
  const double symmetric =
      log_sum_exp({(g.a1 - 1.0) * l1 + (g.a2 - 1.0) * l2, (g.a1 - 1.0) * l2 + (g.a2 - 1.0) * l1});
  return gd_common_log_terms(t, g) + (g.a0 - 1.0) * std::log(t.lambda0) + symmetric;
}

}  // namespace mobw
