#pragma once

// Exact samplers for univariate log-concave densities on (0, inf), given the
// log density up to an additive constant.

#include <mobw/random.hpp>

#include <cstddef>
#include <functional>
#include <vector>

namespace mobw {

using LogDensity = std::function<double(double)>;

// Maximizer of a log-concave function on (0, inf). Golden-section search on
// [lower, upper] where `upper` is doubled from 1 until the function stops
// increasing. Throws BracketError if no finite maximum can be bracketed.
double locate_mode(const LogDensity& log_density, double lower = 1e-3);

// Derivative-free adaptive rejection sampling (secant-based envelope).
//
// The upper hull on [x_i, x_{i+1}] is min(L_{i-1,i}, L_{i+1,i+2}) where L_{j,j+1}
// is the chord through abscissae j and j+1; outside [x_1, x_k] the outermost
// chords are extended. Chords L_{i,i+1} double as the squeeze. Each rejected
// point that required a density evaluation is added to the abscissae, so the
// object is stateful: use one instance per thread.
class AdaptiveRejectionSampler {
 public:
  explicit AdaptiveRejectionSampler(LogDensity log_density, std::size_t max_abscissae = 64);

  double operator()(Rng& rng);

  double mode() const noexcept { return mode_; }
  std::size_t abscissae() const noexcept { return x_.size(); }
  std::size_t density_evaluations() const noexcept { return evaluations_; }

 private:
  struct Segment {
    double left;
    double right;  // +inf for the right tail
    double y_left;
    double slope;
  };

  void insert(double x, double hx);
  void rebuild();
  double upper_at(double x) const;
  double squeeze_at(double x) const;

  LogDensity log_density_;
  std::size_t max_abscissae_;
  double mode_ = 0.0;
  double offset_ = 0.0;
  std::vector<double> x_;
  std::vector<double> hx_;
  std::vector<Segment> segments_;
  std::vector<double> cumulative_;
  std::size_t evaluations_ = 0;
};

// Kinderman-Monahan ratio of uniforms, with the origin relocated to the mode.
class RatioOfUniformsSampler {
 public:
  explicit RatioOfUniformsSampler(LogDensity log_density);

  double operator()(Rng& rng);

  double mode() const noexcept { return mode_; }
  double v_min() const noexcept { return v_min_; }
  double v_max() const noexcept { return v_max_; }

 private:
  LogDensity log_density_;
  double mode_;
  double h_mode_;
  double v_min_;
  double v_max_;
};

}  // namespace mobw
