#include <mobw/cli.hpp>

#include <mobw/data.hpp>
#include <mobw/errors.hpp>
#include <mobw/inference.hpp>
#include <mobw/numeric.hpp>
#include <mobw/samplers.hpp>
#include <mobw/simulation.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace mobw::cli {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(path, number, "expected key=value");
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(path, number, "empty key");
    if (key == "config") throw ParseError(path, number, "config files cannot include other configs");
    args.push_back("--" + std::string(key) + "=" + std::string(value));
  }
  return args;
}

namespace {

struct Settings {
  std::string command;
  std::string data;
  double divisor = 1.0;
  std::string scheme = "complete";
  std::size_t units = 0;  // 0: not given
  bool restricted = false;
  std::size_t draws = 0;  // 0: command default
  std::uint64_t seed = 20240101;
  std::string levels;
  std::string out = ".";
  std::string config;
  std::string method = "adaptive-rejection";
  unsigned workers = 1;
  std::string pvalue = "exact";
  double a = 0.001, b = 0.001, a0 = 1.0, a1 = 1.0, a2 = 1.0, c1 = 0.001, c2 = 0.001;
  std::optional<double> d1, d2, d3, d4;
  std::string bf_mode = "closed";
  // simulate
  double alpha = 2.0;
  std::string lambda0 = "0.5";
  double lambda1 = 1.0;
  double lambda2 = 1.2;
  std::string sizes = "30";
  std::size_t replications = 1000;

  PriorSpec prior() const { return PriorSpec(GDParams(a, b, a0, a1, a2), c1, c2); }

  BFHyper hypers() const {
    const BFHyper m = BFHyper::matching(prior());
    return BFHyper(d1.value_or(m.d1), d2.value_or(m.d2), d3.value_or(m.d3), d4.value_or(m.d4));
  }
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t(trim(item));
    if (t.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw ValidationError(std::string("invalid ") + what + " value '" + t + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> levels_of(const Settings& s, const char* fallback) {
  const auto levels = parse_list(s.levels.empty() ? fallback : s.levels, "level");
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw ValidationError("levels must lie in (0, 1)");
  }
  return levels;
}

// Canonical description of everything that determines the outputs.
std::string manifest_text(const Settings& s, const std::vector<std::pair<std::string, std::string>>& extra) {
  std::map<std::string, std::string> kv{
      {"command", s.command},
      {"seed", std::to_string(s.seed)},
      {"method", s.method},
      {"a", format_double(s.a)},
      {"b", format_double(s.b)},
      {"a0", format_double(s.a0)},
      {"a1", format_double(s.a1)},
      {"a2", format_double(s.a2)},
      {"c1", format_double(s.c1)},
      {"c2", format_double(s.c2)},
      {"scheme", s.scheme},
  };
  for (const auto& [k, v] : extra) kv[k] = v;
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return text;
}

class Outputs {
 public:
  Outputs(const std::string& dir, std::string manifest)
      : dir_(dir), manifest_(std::move(manifest)) {
    std::filesystem::create_directories(dir_);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(manifest_)));
    stamp_ = std::string("# manifest=") + buf + "\n";
  }

  void write(const std::string& name, const std::string& body) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    f << stamp_ << body;
    f.close();
    if (!f) throw std::runtime_error("failed to write " + path.string());
    written_.push_back(path.string());
  }

  void write_manifest() { write("manifest.txt", manifest_); }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::string manifest_;
  std::string stamp_;
  std::vector<std::string> written_;
};

CompetingRisksDataset load(const Settings& s) {
  if (s.data.empty()) throw ValidationError("--data is required");
  if (!std::filesystem::exists(s.data)) throw ValidationError("data file '" + s.data + "' does not exist");
  if (!(s.divisor > 0.0) || !std::isfinite(s.divisor)) throw ValidationError("--divisor must be positive");
  const CensoringScheme sch = parse_scheme(s.scheme);
  validate(sch);
  std::optional<std::size_t> units;
  if (s.units > 0) units = s.units;
  return load_dataset(s.data, s.divisor, sch, units);
}

SamplerOptions sampler_options(const Settings& s) {
  SamplerOptions o;
  o.method = parse_method(s.method);
  o.workers = std::max(1u, s.workers);
  return o;
}

KSPValue pvalue_method(const Settings& s) {
  if (s.pvalue == "exact") return KSPValue::Exact;
  if (s.pvalue == "asymptotic") return KSPValue::Asymptotic;
  throw ValidationError("--pvalue must be exact or asymptotic");
}

struct Analysis {
  CompetingRisksDataset data;
  EstimateReport report;
  PooledFit pooled;
  std::vector<std::string> warnings;
};

Analysis analyze_data(const Settings& s, const std::vector<double>& levels, std::size_t draws) {
  CompetingRisksDataset data = load(s);
  const PriorSpec prior = s.prior();
  const SamplerOptions opt = sampler_options(s);
  for (double l : levels) {
    if (static_cast<double>(draws) * (1.0 - l) < 1.0) {
      throw ValidationError("--draws too small for level " + format_double(l));
    }
  }
  Rng rng = make_stream(s.seed, 0);
  const WeightedSample sample = s.restricted ? sample_posterior_restricted(rng, data, prior, draws, opt)
                                             : sample_posterior_unrestricted(rng, data, prior, draws, opt);
  EstimateReport report = summarize(sample, levels);
  report.seed = s.seed;
  report.scheme = describe(data.scheme());
  Rng pooled_rng = make_stream(s.seed, 1);
  const PooledFit pooled = pooled_weibull_fit(data, s.hypers(), pooled_rng, draws, opt);
  std::vector<std::string> warnings = data.warnings();
  warnings.insert(warnings.end(), sample.warnings.begin(), sample.warnings.end());
  return {std::move(data), std::move(report), pooled, std::move(warnings)};
}

std::vector<std::pair<std::string, std::string>> analysis_manifest(const Settings& s,
                                                                   const std::vector<double>& levels,
                                                                   std::size_t draws) {
  std::string lv;
  for (double l : levels) lv += (lv.empty() ? "" : ",") + format_double(l);
  const BFHyper h = s.hypers();
  return {{"data", s.data},
          {"divisor", format_double(s.divisor)},
          {"units", std::to_string(s.units)},
          {"restricted", s.restricted ? "true" : "false"},
          {"draws", std::to_string(draws)},
          {"levels", lv},
          {"pvalue", s.pvalue},
          {"d1", format_double(h.d1)},
          {"d2", format_double(h.d2)},
          {"d3", format_double(h.d3)},
          {"d4", format_double(h.d4)}};
}

int cmd_analyze(const Settings& s, std::ostream& out) {
  const auto levels = levels_of(s, "0.90,0.95,0.99");
  const std::size_t draws = s.draws ? s.draws : 100000;
  const auto manifest = manifest_text(s, analysis_manifest(s, levels, draws));
  Analysis a = analyze_data(s, levels, draws);
  const EstimateReport& r = a.report;

  std::ostringstream est;
  est << "parameter,mean,variance\n";
  for (Parameter p : kAllParameters) {
    est << parameter_name(p) << ',' << format_double(r.at(p).mean) << ','
        << format_double(r.at(p).variance) << '\n';
  }

  std::ostringstream iv;
  iv << "parameter,level,kind,lower,upper,length\n";
  for (IntervalKind kind : {IntervalKind::Symmetric, IntervalKind::HPD}) {
    for (double level : levels) {
      for (Parameter p : kAllParameters) {
        const auto& ci = r.at(p).interval(level, kind);
        iv << parameter_name(p) << ',' << format_double(level) << ',' << interval_kind_name(kind)
           << ',' << format_double(ci.lower) << ',' << format_double(ci.upper) << ','
           << format_double(ci.length()) << '\n';
      }
    }
  }

  const KSPValue pm = pvalue_method(s);
  const double lambda_total =
      r.mean(Parameter::Lambda0) + r.mean(Parameter::Lambda1) + r.mean(Parameter::Lambda2);
  const KSResult ks = ks_test(a.data, [&](double t) { return fitted_min_cdf(t, r); }, pm);
  const KSResult ks_pooled = ks_test(
      a.data, [&](double t) { return fitted_min_cdf(t, a.pooled.alpha_star, a.pooled.lambda_star); }, pm);
  std::ostringstream fit;
  fit << "model,alpha,lambda_total,ks_statistic,p_value\n";
  fit << (s.restricted ? "mobw_restricted" : "mobw") << ',' << format_double(r.mean(Parameter::Alpha))
      << ',' << format_double(lambda_total) << ',' << format_double(ks.statistic) << ','
      << format_double(ks.p_value) << '\n';
  fit << "pooled_weibull," << format_double(a.pooled.alpha_star) << ','
      << format_double(a.pooled.lambda_star) << ',' << format_double(ks_pooled.statistic) << ','
      << format_double(ks_pooled.p_value) << '\n';

  Outputs o(s.out, manifest);
  o.write("estimates.csv", est.str());
  o.write("intervals.csv", iv.str());
  o.write("fit.csv", fit.str());
  o.write_manifest();

  out << "n=" << a.data.observed() << " counts=(" << a.data.count(Cause::Both) << ','
      << a.data.count(Cause::First) << ',' << a.data.count(Cause::Second) << ")"
      << (s.restricted ? " restricted" : "") << " draws=" << draws;
  if (s.restricted) out << " ess=" << format_double(std::round(r.ess));
  out << '\n';
  for (Parameter p : kAllParameters) {
    out << "  " << parameter_name(p) << " mean=" << format_double(r.at(p).mean) << '\n';
  }
  out << "  KS D=" << format_double(ks.statistic) << " p=" << format_double(ks.p_value) << '\n';
  for (const auto& w : a.warnings) out << "warning: " << w << '\n';
  for (const auto& f : o.written()) out << "wrote " << f << '\n';
  return 0;
}

int cmd_plot_data(const Settings& s, std::ostream& out) {
  const auto levels = levels_of(s, "0.90,0.95,0.99");
  const std::size_t draws = s.draws ? s.draws : 100000;
  const auto manifest = manifest_text(s, analysis_manifest(s, levels, draws));
  Analysis a = analyze_data(s, levels, draws);

  std::ostringstream cdf;
  cdf << "t,empirical_cdf,fitted_cdf,pooled_cdf\n";
  const auto& obs = a.data.observations();
  const auto n = static_cast<double>(obs.size());
  for (std::size_t i = 0; i < obs.size();) {
    std::size_t j = i;
    while (j < obs.size() && obs[j].time == obs[i].time) ++j;
    const double t = obs[i].time;
    cdf << format_double(t) << ',' << format_double(static_cast<double>(j) / n) << ','
        << format_double(fitted_min_cdf(t, a.report)) << ','
        << format_double(fitted_min_cdf(t, a.pooled.alpha_star, a.pooled.lambda_star)) << '\n';
    i = j;
  }
  Outputs o(s.out, manifest);
  o.write("cdf.csv", cdf.str());
  for (const auto& f : o.written()) out << "wrote " << f << '\n';
  return 0;
}

int cmd_bf_test(const Settings& s, std::ostream& out) {
  const CompetingRisksDataset data = load(s);
  const BFHyper h = s.hypers();
  BFMode mode;
  if (s.bf_mode == "closed") {
    mode = BFMode::ClosedForm;
  } else if (s.bf_mode == "numeric") {
    mode = BFMode::Numeric;
  } else {
    throw ValidationError("--bf-mode must be closed or numeric");
  }
  const auto manifest = manifest_text(s, {{"data", s.data},
                                          {"divisor", format_double(s.divisor)},
                                          {"bf_mode", s.bf_mode},
                                          {"d1", format_double(h.d1)},
                                          {"d2", format_double(h.d2)},
                                          {"d3", format_double(h.d3)},
                                          {"d4", format_double(h.d4)}});
  const double ln_bf = log_bayes_factor(data, s.prior(), h, mode);
  const double log10_bf = ln_bf / std::log(10.0);
  const std::string reading =
      log10_bf < 0.0 ? "BF < 1: evidence against H0 (lambda1 = lambda2); causes differ"
                     : "BF >= 1: no evidence against H0 (lambda1 = lambda2)";

  std::ostringstream bf;
  bf << "n,n0,n1,n2,ln_bf,log10_bf,reading\n";
  bf << data.observed() << ',' << data.count(Cause::Both) << ',' << data.count(Cause::First) << ','
     << data.count(Cause::Second) << ',' << format_double(ln_bf) << ',' << format_double(log10_bf)
     << ",\"" << reading << "\"\n";
  Outputs o(s.out, manifest);
  o.write("bf.csv", bf.str());
  out << "counts=(" << data.count(Cause::Both) << ',' << data.count(Cause::First) << ','
      << data.count(Cause::Second) << ") log10 BF=" << format_double(log10_bf) << '\n'
      << reading << '\n';
  for (const auto& f : o.written()) out << "wrote " << f << '\n';
  return 0;
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const auto levels = levels_of(s, "0.95");
  const std::size_t draws = s.draws ? s.draws : 2000;
  const auto sizes = parse_list(s.sizes, "sample size");
  const auto lambda0s = parse_list(s.lambda0, "lambda0");
  const CensoringScheme sch = parse_scheme(s.scheme);

  std::string lv;
  for (double l : levels) lv += (lv.empty() ? "" : ",") + format_double(l);
  const auto manifest = manifest_text(s, {{"alpha", format_double(s.alpha)},
                                          {"lambda0", s.lambda0},
                                          {"lambda1", format_double(s.lambda1)},
                                          {"lambda2", format_double(s.lambda2)},
                                          {"n", s.sizes},
                                          {"replications", std::to_string(s.replications)},
                                          {"draws", std::to_string(draws)},
                                          {"levels", lv},
                                          {"restricted", s.restricted ? "true" : "false"}});
  std::vector<StudyResult> results;
  for (double l0 : lambda0s) {
    for (double nd : sizes) {
      if (!(nd >= 1.0) || nd != std::floor(nd)) throw ValidationError("sample sizes must be positive integers");
      StudyConfig cfg(MOBWParams(s.alpha, l0, s.lambda1, s.lambda2), static_cast<std::size_t>(nd));
      cfg.scheme = sch;
      cfg.replications = s.replications;
      cfg.draws = draws;
      cfg.levels = levels;
      cfg.restricted = s.restricted;
      cfg.master_seed = s.seed;
      cfg.workers = std::max(1u, s.workers);
      cfg.prior = s.prior();
      cfg.method = parse_method(s.method);
      results.push_back(run_study(cfg));
      const auto& r = results.back();
      out << "n=" << r.n << " lambda0=" << format_double(l0) << " AE(alpha)="
          << format_double(r.at(Parameter::Alpha).average_estimate)
          << " MSE(alpha)=" << format_double(r.at(Parameter::Alpha).mse) << " failed=" << r.failed
          << '\n';
    }
  }
  std::ostringstream csv;
  write_study_csv(csv, results);
  Outputs o(s.out, manifest);
  o.write("study.csv", csv.str());
  for (const auto& f : o.written()) out << "wrote " << f << '\n';
  return 0;
}

void add_common(CLI::App* app, Settings& s) {
  app->add_option("--config", s.config, "flat key=value file of option defaults");
  app->add_option("--seed", s.seed, "master random seed");
  app->add_option("--out", s.out, "output directory");
  app->add_option("--scheme", s.scheme,
                  "censoring scheme, e.g. complete, type2:r=10, progressive1:tau=0.5;1,R=2");
  app->add_option("--method", s.method, "alpha sampler: adaptive-rejection or ratio-of-uniforms");
  app->add_option("--workers", s.workers, "threads");
  app->add_option("--a", s.a, "GD prior shape of the total");
  app->add_option("--b", s.b, "GD prior rate of the total");
  app->add_option("--a0", s.a0, "Dirichlet weight of lambda0");
  app->add_option("--a1", s.a1, "Dirichlet weight of lambda1");
  app->add_option("--a2", s.a2, "Dirichlet weight of lambda2");
  app->add_option("--c1", s.c1, "rate of the Gamma prior on alpha");
  app->add_option("--c2", s.c2, "shape of the Gamma prior on alpha");
}

void add_data(CLI::App* app, Settings& s) {
  app->add_option("--data", s.data, "CSV with columns time,cause (cause 0 = both)");
  app->add_option("--divisor", s.divisor, "times are divided by this (e.g. 365 for days to years)");
  app->add_option("--units", s.units, "units on test (censored schemes)");
}

void add_analysis(CLI::App* app, Settings& s) {
  app->add_flag("--restricted", s.restricted, "impose lambda1 <= lambda2");
  app->add_option("--draws", s.draws, "posterior draws M");
  app->add_option("--levels", s.levels, "comma-separated credible levels");
  app->add_option("--pvalue", s.pvalue, "KS p-value: exact or asymptotic");
}

// Priors of the pooled single-Weibull model; default to the matching choice.
void add_pooled(CLI::App* app, Settings& s) {
  app->add_option("--d1", s.d1, "pooled model: rate of the Gamma prior on alpha* (default c1)");
  app->add_option("--d2", s.d2, "pooled model: shape of the Gamma prior on alpha* (default c2)");
  app->add_option("--d3", s.d3, "pooled model: rate of the Gamma prior on lambda* (default b)");
  app->add_option("--d4", s.d4, "pooled model: shape of the Gamma prior on lambda* (default a)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Bayesian analysis of dependent competing risks under a Marshall-Olkin bivariate Weibull model",
               "mobw"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "posterior estimates, credible intervals and KS fit");
  auto* plot = app.add_subcommand("plot-data", "empirical and fitted CDF at the observed failure times");
  auto* bf = app.add_subcommand("bf-test", "Bayes factor for H0: lambda1 = lambda2");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
  for (auto* c : {analyze, plot, bf, sim}) add_common(c, s);
  for (auto* c : {analyze, plot, bf}) add_data(c, s);
  for (auto* c : {analyze, plot}) add_analysis(c, s);
  for (auto* c : {analyze, plot, bf}) add_pooled(c, s);
  bf->add_option("--bf-mode", s.bf_mode, "closed (needs matched hypers) or numeric");
  sim->add_flag("--restricted", s.restricted, "impose lambda1 <= lambda2");
  sim->add_option("--draws", s.draws, "posterior draws per replication (default 2000)");
  sim->add_option("--levels", s.levels, "comma-separated credible levels (default 0.95)");
  sim->add_option("--alpha", s.alpha, "true shape");
  sim->add_option("--lambda0", s.lambda0, "true lambda0, comma-separated for several cells");
  sim->add_option("--lambda1", s.lambda1, "true lambda1");
  sim->add_option("--lambda2", s.lambda2, "true lambda2");
  sim->add_option("--n", s.sizes, "sample sizes, comma-separated");
  sim->add_option("--replications", s.replications, "replications per cell");

  try {
    // Config values go first so that explicit flags override them.
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (!path.empty()) {
        auto extra = config_arguments(path);
        args.insert(args.begin() + (args.empty() ? 0 : 1), extra.begin(), extra.end());
        break;
      }
    }
    std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (analyze->parsed()) {
      s.command = "analyze";
      return cmd_analyze(s, out);
    }
    if (plot->parsed()) {
      s.command = "plot-data";
      return cmd_plot_data(s, out);
    }
    if (bf->parsed()) {
      s.command = "bf-test";
      return cmd_bf_test(s, out);
    }
    s.command = "simulate";
    return cmd_simulate(s, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "error: " << msg << '\n';
    return 1;
  }
}

}  // namespace mobw::cli
