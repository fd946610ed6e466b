#include <mobw/log_concave.hpp>

#include <mobw/errors.hpp>
#include <mobw/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mobw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// NaN (e.g. log of a non-positive intermediate) counts as zero density.
double evaluate(const LogDensity& h, double x) {
  const double v = h(x);
  return std::isnan(v) ? -kInf : v;
}

// Mass of exp(y0 + s * (x - l)) on [l, l + w]; w may be +inf when s < 0.
double segment_mass(double y0, double s, double w) {
  if (std::isinf(w)) return std::exp(y0) / (-s);
  const double sw = s * w;
  if (std::abs(sw) < 1e-12) return std::exp(y0) * w;
  return std::exp(y0) * std::expm1(sw) / s;
}

// Inverse CDF of the same truncated exponential, for u in (0, 1).
double segment_quantile(double s, double w, double u) {
  if (std::isinf(w)) return std::log1p(-u) / s;
  const double sw = s * w;
  if (std::abs(sw) < 1e-12) return u * w;
  return std::log1p(u * std::expm1(sw)) / s;
}

}  // namespace

double locate_mode(const LogDensity& log_density, double lower) {
  auto h = [&](double x) { return evaluate(log_density, x); };

  double upper = std::max(1.0, 2.0 * lower);
  double h_upper = h(upper);
  if (!std::isfinite(h_upper)) {
    throw BracketError("log density is not finite at " + std::to_string(upper));
  }
  while (true) {
    const double next = 2.0 * upper;
    const double h_next = h(next);
    if (!(h_next > h_upper)) break;
    upper = next;
    h_upper = h_next;
    if (upper > 1e15) throw BracketError("log density still increasing at " + std::to_string(upper));
  }

  double lo = lower;
  double hi = 2.0 * upper;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double m = golden_section_max(h, lo, hi);
    if (m > lo + 1e-9 * (hi - lo) || lo < 1e-300) {
      if (!std::isfinite(h(m))) throw BracketError("no finite maximum found");
      return m;
    }
    // maximum pinned at the lower end
    hi = 2.0 * lo;
    lo *= 1e-3;
  }
  throw BracketError("mode is below the representable range");
}

AdaptiveRejectionSampler::AdaptiveRejectionSampler(LogDensity log_density,
                                                   std::size_t max_abscissae)
    : log_density_(std::move(log_density)), max_abscissae_(std::max<std::size_t>(max_abscissae, 5)) {
  auto h = [&](double x) {
    ++evaluations_;
    return evaluate(log_density_, x);
  };
  mode_ = locate_mode(log_density_);
  const double h_mode = h(mode_);
  offset_ = h_mode;

  // Curvature at the mode sets the initial spread.
  const double d = 1e-4 * mode_;
  const double curvature = (h(mode_ + d) - 2.0 * h_mode + h(mode_ - d)) / (d * d);
  double spread = (std::isfinite(curvature) && curvature < 0.0) ? 1.0 / std::sqrt(-curvature)
                                                                   : 0.5 * mode_;
  spread = std::max(spread, 1e-8 * mode_);

  double step = spread;
  double right = mode_ + step;
  double h_right = h(right);
  while (!(h_right < h_mode - 0.5)) {
    step *= 2.0;
    if (step > 1e15 * std::max(mode_, 1.0)) throw BracketError("log density has no decreasing right tail");
    right = mode_ + step;
    h_right = h(right);
  }

  double left = mode_ - spread;
  if (left <= 0.0) left = 0.5 * mode_;
  double h_left = h(left);
  for (int i = 0; i < 60 && h_left > h_mode - 0.5; ++i) {
    const double next = mode_ - 2.0 * (mode_ - left);
    left = next > 0.0 ? next : 0.5 * left;
    h_left = h(left);
  }

  const double mid_left = 0.5 * (left + mode_);
  const double mid_right = 0.5 * (mode_ + right);
  for (double x : {left, mid_left, mode_, mid_right, right}) {
    const double hx = x == left ? h_left : x == right ? h_right : x == mode_ ? h_mode : h(x);
    x_.push_back(x);
    hx_.push_back(hx - offset_);
  }
  rebuild();
}

void AdaptiveRejectionSampler::insert(double x, double hx) {
  const auto it = std::lower_bound(x_.begin(), x_.end(), x);
  if (it != x_.end() && *it == x) return;
  const auto pos = it - x_.begin();
  x_.insert(it, x);
  hx_.insert(hx_.begin() + pos, hx - offset_);
  rebuild();
}

void AdaptiveRejectionSampler::rebuild() {
  const std::size_t k = x_.size();
  std::vector<double> slope(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) slope[i] = (hx_[i + 1] - hx_[i]) / (x_[i + 1] - x_[i]);
  auto chord = [&](std::size_t i, double x) { return hx_[i] + slope[i] * (x - x_[i]); };

  if (!(slope[k - 2] < 0.0)) throw std::logic_error("adaptive rejection: right tail is not decreasing");

  segments_.clear();
  segments_.push_back({0.0, x_[0], chord(0, 0.0), slope[0]});
  segments_.push_back({x_[0], x_[1], chord(1, x_[0]), slope[1]});
  for (std::size_t i = 1; i + 2 < k; ++i) {
    // min of chord i-1 (lower on the left) and chord i+1 (lower on the right)
    const double sa = slope[i - 1];
    const double sb = slope[i + 1];
    double z = x_[i];
    if (sa > sb) {
      z = (chord(i + 1, 0.0) - chord(i - 1, 0.0)) / (sa - sb);
      if (!std::isfinite(z)) z = x_[i];
      z = std::clamp(z, x_[i], x_[i + 1]);
    }
    if (z > x_[i]) segments_.push_back({x_[i], z, chord(i - 1, x_[i]), sa});
    if (z < x_[i + 1]) segments_.push_back({z, x_[i + 1], chord(i + 1, z), sb});
  }
  segments_.push_back({x_[k - 2], x_[k - 1], chord(k - 3, x_[k - 2]), slope[k - 3]});
  segments_.push_back({x_[k - 1], kInf, hx_[k - 1], slope[k - 2]});

  cumulative_.resize(segments_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    total += segment_mass(s.y_left, s.slope, s.right - s.left);
    cumulative_[i] = total;
  }
}

double AdaptiveRejectionSampler::upper_at(double x) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                             [](double v, const Segment& s) { return v < s.left; });
  const auto& s = *(it == segments_.begin() ? it : std::prev(it));
  return s.y_left + s.slope * (x - s.left);
}

double AdaptiveRejectionSampler::squeeze_at(double x) const {
  if (x < x_.front() || x > x_.back()) return -kInf;
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
  const double s = (hx_[i + 1] - hx_[i]) / (x_[i + 1] - x_[i]);
  return hx_[i] + s * (x - x_[i]);
}

double AdaptiveRejectionSampler::operator()(Rng& rng) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double total = cumulative_.back();
    const double pick = uniform_open(rng) * total;
    const auto idx = static_cast<std::size_t>(
        std::lower_bound(cumulative_.begin(), cumulative_.end(), pick) - cumulative_.begin());
    const auto& seg = segments_[std::min(idx, segments_.size() - 1)];
    const double x = seg.left + segment_quantile(seg.slope, seg.right - seg.left, uniform_open(rng));
    if (!(x > 0.0) || !std::isfinite(x)) continue;

    const double upper = seg.y_left + seg.slope * (x - seg.left);
    const double log_u = std::log(uniform_open(rng));
    if (log_u <= squeeze_at(x) - upper) return x;

    ++evaluations_;
    const double hx = evaluate(log_density_, x) - offset_;
    const bool accept = log_u <= hx - upper;
    if (x_.size() < max_abscissae_ && std::isfinite(hx)) insert(x, hx + offset_);
    if (accept) return x;
  }
  throw std::runtime_error("adaptive rejection sampler failed to accept a point");
}

RatioOfUniformsSampler::RatioOfUniformsSampler(LogDensity log_density)
    : log_density_(std::move(log_density)) {
  auto h = [&](double x) { return evaluate(log_density_, x); };
  mode_ = locate_mode(log_density_);
  h_mode_ = h(mode_);

  // v = (x - m) * sqrt(f(x) / f(m)); its log magnitude is concave on each side of m.
  auto log_v_right = [&](double x) { return std::log(x - mode_) + 0.5 * (h(x) - h_mode_); };
  auto log_v_left = [&](double x) { return std::log(mode_ - x) + 0.5 * (h(x) - h_mode_); };

  double step = 0.5 * std::max(mode_, 1.0);
  while (log_v_right(mode_ + 2.0 * step) > log_v_right(mode_ + step)) {
    step *= 2.0;
    if (step > 1e15) throw BracketError("ratio-of-uniforms: right tail too heavy");
  }
  const double x_right = golden_section_max(log_v_right, mode_ * (1.0 + 1e-12) + 1e-300, mode_ + 2.0 * step);
  const double x_left = golden_section_max(log_v_left, mode_ * 1e-12, mode_ * (1.0 - 1e-12));
  v_max_ = std::exp(log_v_right(x_right)) * (1.0 + 1e-9);
  v_min_ = -std::exp(log_v_left(x_left)) * (1.0 + 1e-9);
}

double RatioOfUniformsSampler::operator()(Rng& rng) {
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const double u = uniform_open(rng);
    const double v = v_min_ + (v_max_ - v_min_) * uniform_open(rng);
    const double x = mode_ + v / u;
    if (!(x > 0.0)) continue;
    if (2.0 * std::log(u) <= evaluate(log_density_, x) - h_mode_) return x;
  }
  throw std::runtime_error("ratio-of-uniforms sampler failed to accept a point");
}

}  // namespace mobw
