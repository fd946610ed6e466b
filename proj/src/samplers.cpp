#include <mobw/samplers.hpp>

#include <mobw/errors.hpp>
#include <mobw/numeric.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace mobw {

PriorSpec::PriorSpec(GDParams gd_, double c1_, double c2_) : gd(gd_), c1(c1_), c2(c2_) {
  if (!(c1 > 0.0) || !std::isfinite(c1) || !(c2 > 0.0) || !std::isfinite(c2)) {
    throw ValidationError("shape prior hyperparameters c1, c2 must be positive and finite");
  }
}

PriorSpec PriorSpec::noninformative() {
  return PriorSpec(GDParams(0.001, 0.001, 1.0, 1.0, 1.0), 0.001, 0.001);
}

std::string_view parameter_name(Parameter p) {
  switch (p) {
    case Parameter::Alpha: return "alpha";
    case Parameter::Lambda0: return "lambda0";
    case Parameter::Lambda1: return "lambda1";
    case Parameter::Lambda2: return "lambda2";
  }
  return "?";
}

double PosteriorDraw::get(Parameter p) const {
  switch (p) {
    case Parameter::Alpha: return alpha;
    case Parameter::Lambda0: return scales.lambda0;
    case Parameter::Lambda1: return scales.lambda1;
    case Parameter::Lambda2: return scales.lambda2;
  }
  return 0.0;
}

std::vector<double> WeightedSample::values(Parameter p) const {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d.get(p));
  return out;
}

double WeightedSample::expectation(const std::function<double(const PosteriorDraw&)>& g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) s += weights[i] * g(draws[i]);
  return s;
}

ShapeMarginal::ShapeMarginal(SufficientStats stats_, double c1_, double c2_, double a_, double b_)
    : stats(std::move(stats_)), c1(c1_), c2(c2_), a(a_), b(b_) {}

ShapeMarginal::ShapeMarginal(const CompetingRisksDataset& d, const PriorSpec& p)
    : ShapeMarginal(d.stats(), p.c1, p.c2, p.gd.a, p.gd.b) {}

double ShapeMarginal::log_rate(double alpha) const {
  std::vector<double> terms;
  terms.reserve(stats.exposure_terms.size() + 1);
  terms.push_back(std::log(b));
  for (const auto& t : stats.exposure_terms) {
    if (t.weight > 0.0) terms.push_back(std::log(t.weight) + alpha * t.log_time);
  }
  return log_sum_exp(terms);
}

double ShapeMarginal::operator()(double alpha) const {
  if (!(alpha > 0.0)) throw DomainError("shape marginal: alpha must be > 0");
  const double n = static_cast<double>(stats.n_star);
  return -c1 * alpha + (n + c2 - 1.0) * std::log(alpha) - (a + n) * log_rate(alpha) +
         (alpha - 1.0) * stats.sum_log_time;
}

double log_alpha_marginal(double alpha, const CompetingRisksDataset& d, const PriorSpec& p) {
  return ShapeMarginal(d, p)(alpha);
}

std::string_view method_name(AlphaMethod m) {
  return m == AlphaMethod::AdaptiveRejection ? "adaptive-rejection" : "ratio-of-uniforms";
}

AlphaMethod parse_method(std::string_view text) {
  if (text == "adaptive-rejection" || text == "ars") return AlphaMethod::AdaptiveRejection;
  if (text == "ratio-of-uniforms" || text == "rou") return AlphaMethod::RatioOfUniforms;
  throw ValidationError("unknown alpha sampling method '" + std::string(text) +
                        "' (expected adaptive-rejection or ratio-of-uniforms)");
}

namespace {

std::variant<AdaptiveRejectionSampler, RatioOfUniformsSampler> make_impl(LogDensity f,
                                                                         AlphaMethod m) {
  if (m == AlphaMethod::AdaptiveRejection) return AdaptiveRejectionSampler(std::move(f));
  return RatioOfUniformsSampler(std::move(f));
}

void require_failures(const CompetingRisksDataset& d) {
  if (d.stats().n_star == 0) {
    throw ValidationError("posterior sampling needs at least one observed failure");
  }
}

}  // namespace

AlphaSampler::AlphaSampler(LogDensity log_density, AlphaMethod method)
    : impl_(make_impl(std::move(log_density), method)) {}

double AlphaSampler::operator()(Rng& rng) {
  return std::visit([&](auto& s) { return s(rng); }, impl_);
}

double AlphaSampler::mode() const {
  return std::visit([](const auto& s) { return s.mode(); }, impl_);
}

AlphaMethod AlphaSampler::method() const noexcept {
  return impl_.index() == 0 ? AlphaMethod::AdaptiveRejection : AlphaMethod::RatioOfUniforms;
}

double sample_alpha(Rng& rng, const CompetingRisksDataset& d, const PriorSpec& p,
                    AlphaMethod method) {
  require_failures(d);
  ShapeMarginal marginal(d, p);
  AlphaSampler s([marginal](double a) { return marginal(a); }, method);
  return s(rng);
}

namespace {

GDParams scale_params(const SufficientStats& s, const PriorSpec& p, double log_rate,
                      bool restricted) {
  const double n = static_cast<double>(s.n_star);
  const double n0 = static_cast<double>(s.cause_counts[0]);
  const double n1 = static_cast<double>(s.cause_counts[1]);
  const double n2 = static_cast<double>(s.cause_counts[2]);
  const double rate = std::exp(log_rate);
  if (restricted) {
    return GDParams(p.gd.a + n, rate, p.gd.a0 + 2.0 * n0, p.gd.a1 + n1 + n2, p.gd.a2 + n1 + n2);
  }
  return GDParams(p.gd.a + n, rate, p.gd.a0 + n0, p.gd.a1 + n1, p.gd.a2 + n2);
}

}  // namespace

GDParams conditional_scale_params(const CompetingRisksDataset& d, const PriorSpec& p, double alpha,
                                  bool restricted) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
  ShapeMarginal m(d, p);
  return scale_params(d.stats(), p, m.log_rate(alpha), restricted);
}

void for_each_block(std::size_t M, std::size_t block, unsigned workers, std::uint64_t master,
                    const std::function<void(std::size_t, std::size_t, Rng&)>& fill) {
  block = std::max<std::size_t>(block, 1);
  const std::size_t blocks = (M + block - 1) / block;
  auto run = [&](std::size_t k) {
    Rng rng = make_stream(master, k);
    fill(k * block, std::min(M, (k + 1) * block), rng);
  };
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(workers, 1u), blocks));
  if (threads <= 1) {
    for (std::size_t k = 0; k < blocks; ++k) run(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < blocks;) {
        try {
          run(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = blocks;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

WeightedSample sample_posterior(Rng& rng, const CompetingRisksDataset& d, const PriorSpec& p,
                                std::size_t M, const SamplerOptions& opt, bool restricted) {
  require_failures(d);
  if (M == 0) throw ValidationError("number of posterior draws must be >= 1");

  const ShapeMarginal marginal(d, p);
  const AlphaSampler base([marginal](double a) { return marginal(a); }, opt.method);
  const std::uint64_t master = rng();

  WeightedSample out;
  out.restricted = restricted;
  out.draws.resize(M);
  for_each_block(M, opt.block, opt.workers, master, [&](std::size_t b, std::size_t e, Rng& r) {
    AlphaSampler alpha_sampler = base;
    for (std::size_t i = b; i < e; ++i) {
      const double alpha = alpha_sampler(r);
      const GDParams g = scale_params(marginal.stats, p, marginal.log_rate(alpha), restricted);
      out.draws[i] = {alpha, restricted ? sample_pogd(r, g) : sample_gd(r, g)};
    }
  });

  if (!restricted) {
    out.weights.assign(M, 1.0 / static_cast<double>(M));
    out.ess = static_cast<double>(M);
    return out;
  }

  std::vector<double> log_w(M);
  for (std::size_t i = 0; i < M; ++i) log_w[i] = log_importance_weight(out.draws[i], d);
  const double norm = log_sum_exp(log_w);
  out.weights.resize(M);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    out.weights[i] = std::exp(log_w[i] - norm);
    sum_sq += out.weights[i] * out.weights[i];
  }
  out.ess = 1.0 / sum_sq;
  if (out.ess < 0.05 * static_cast<double>(M)) {
    std::ostringstream msg;
    msg << "low effective sample size: " << out.ess << " of " << M << " draws";
    out.warnings.push_back(msg.str());
  }
  return out;
}

}  // namespace

WeightedSample sample_posterior_unrestricted(Rng& rng, const CompetingRisksDataset& d,
                                             const PriorSpec& p, std::size_t M,
                                             const SamplerOptions& opt) {
  return sample_posterior(rng, d, p, M, opt, false);
}

WeightedSample sample_posterior_restricted(Rng& rng, const CompetingRisksDataset& d,
                                           const PriorSpec& p, std::size_t M,
                                           const SamplerOptions& opt) {
  return sample_posterior(rng, d, p, M, opt, true);
}

double log_importance_weight(const PosteriorDraw& draw, const CompetingRisksDataset& d) {
  const auto& s = draw.scales;
  if (!(s.lambda0 > 0.0) || !(s.lambda1 > 0.0) || !(s.lambda2 > 0.0)) {
    throw DomainError("importance weight: scale components must be > 0");
  }
  const auto& st = d.stats();
  const double n = static_cast<double>(st.n_star);
  return n * std::log(s.total()) - static_cast<double>(st.cause_counts[0]) * std::log(s.lambda0) -
         static_cast<double>(st.cause_counts[2]) * std::log(s.lambda1) -
         static_cast<double>(st.cause_counts[1]) * std::log(s.lambda2);
}

double importance_weight(const PosteriorDraw& draw, const CompetingRisksDataset& d) {
  return std::exp(log_importance_weight(draw, d));
}

}  // namespace mobw
