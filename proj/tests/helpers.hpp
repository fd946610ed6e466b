#pragma once

#include <mobw/data.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(MOBW_DATA_DIR) + "/" + name; }

inline mobw::CompetingRisksDataset retinopathy() {
  return mobw::load_dataset(data_path("retinopathy.csv"), 365.0, mobw::scheme::Complete{});
}

inline mobw::CompetingRisksDataset complete_dataset(const std::vector<double>& times,
                                                    const std::vector<int>& causes) {
  std::vector<mobw::Observation> obs;
  for (std::size_t i = 0; i < times.size(); ++i) {
    obs.push_back({times[i], static_cast<mobw::Cause>(causes[i])});
  }
  return mobw::CompetingRisksDataset(obs, mobw::scheme::Complete{}, obs.size());
}

inline double integrate(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-12);
}

// Composite Gauss-Legendre nodes and weights on [lo, hi].
struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

inline Rule composite_rule(const std::vector<double>& breaks) {
  using G = boost::math::quadrature::gauss<double, 20>;
  Rule r;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p];
    const double b = breaks[p + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const auto& abscissa = G::abscissa();
    const auto& weights = G::weights();
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      const double xs[2] = {mid - half * abscissa[i], mid + half * abscissa[i]};
      const int count = abscissa[i] == 0.0 ? 1 : 2;
      for (int k = 0; k < count; ++k) {
        r.x.push_back(xs[k]);
        r.w.push_back(half * weights[i]);
      }
    }
  }
  return r;
}

inline Rule uniform_panels(double lo, double hi, int panels) {
  std::vector<double> b;
  for (int i = 0; i <= panels; ++i) b.push_back(lo + (hi - lo) * i / panels);
  return composite_rule(b);
}

// sup |F1 - F2| for two samples
inline double ks_two_sample(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
  }
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace testing
