#pragma once

// Weibull, Marshall-Olkin bivariate Weibull (MOBW), Gamma-Dirichlet (GD) and
// partially ordered Gamma-Dirichlet (POGD) laws.
//
// Weibull convention used throughout the library (rate form):
//
//   S(u) = exp(-lambda * u^alpha),   f(u) = alpha * lambda * u^(alpha-1) * S(u).
//
// `lambda` is a rate-like scale, not the scale of the (u / eta)^alpha form.
// All densities are returned in log space; powers u^alpha are evaluated as
// exp(alpha * log u).

#include <mobw/random.hpp>

namespace mobw {

struct WeibullParams {
  double shape;
  double scale;

  WeibullParams(double shape, double scale);
};

struct MOBWParams {
  double shape;
  double lambda0;
  double lambda1;
  double lambda2;

  MOBWParams(double shape, double lambda0, double lambda1, double lambda2);

  double lambda_total() const noexcept { return lambda0 + lambda1 + lambda2; }
};

// Gamma-Dirichlet hyperparameters: total ~ Gamma(a, rate b), split ~ Dirichlet(a0, a1, a2).
struct GDParams {
  double a;
  double b;
  double a0;
  double a1;
  double a2;

  GDParams(double a, double b, double a0, double a1, double a2);

  double abar() const noexcept { return a0 + a1 + a2; }
};

struct ScaleTriple {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  double total() const noexcept { return lambda0 + lambda1 + lambda2; }
};

enum class Cause : int { Both = 0, First = 1, Second = 2 };

struct Observation {
  double time;
  Cause cause;
};

double weibull_log_pdf(double t, const WeibullParams& p);
double weibull_survival(double t, const WeibullParams& p);

// Log of the joint survival function P(X1 > x1, X2 > x2).
double mobw_log_surv(double x1, double x2, const MOBWParams& p);

// Log density of (X1, X2): the absolutely continuous parts f1 (x1 < x2) and
// f2 (x1 > x2), and the singular component f0 on the diagonal.
double mobw_log_density(double x1, double x2, const MOBWParams& p);

// One competing-risks observation T = min(X1, X2) with its cause. Cause::Both
// iff U0 is not beaten by either U1 or U2.
Observation sample_mobw(Rng& rng, const MOBWParams& p);

ScaleTriple sample_gd(Rng& rng, const GDParams& g);

// GD draw with lambda1 and lambda2 swapped when needed so that lambda1 <= lambda2.
ScaleTriple sample_pogd(Rng& rng, const GDParams& g);

double gd_log_pdf(const ScaleTriple& t, const GDParams& g);
double pogd_log_pdf(const ScaleTriple& t, const GDParams& g);

}  // namespace mobw
