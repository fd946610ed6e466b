#include <mobw/simulation.hpp>

#include <mobw/errors.hpp>
#include <mobw/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mobw {

void StudyConfig::validate() const {
  if (n == 0) throw ValidationError("sample size n must be >= 1");
  if (replications == 0) throw ValidationError("replications must be >= 1");
  if (draws < 100) throw ValidationError("draws per replication must be >= 100");
  if (levels.empty()) throw ValidationError("at least one credible level is required");
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw ValidationError("credible levels must lie in (0, 1)");
    if (static_cast<double>(draws) * (1.0 - l) < 1.0) {
      throw ValidationError("too few draws per replication for level " + format_double(l));
    }
  }
  mobw::validate(scheme);
}

int ReplicationRecord::covers(Parameter p, double truth, double level, IntervalKind kind) const {
  return report.at(p).interval(level, kind).contains(truth) ? 1 : 0;
}

ReplicationRecord run_replication(Rng& rng, const StudyConfig& cfg) {
  std::vector<Observation> complete(cfg.n);
  for (auto& o : complete) o = sample_mobw(rng, cfg.truth);
  const CompetingRisksDataset data = apply_censoring(complete, cfg.scheme, rng);

  SamplerOptions opt;
  opt.method = cfg.method;
  const WeightedSample s = cfg.restricted
                               ? sample_posterior_restricted(rng, data, cfg.prior, cfg.draws, opt)
                               : sample_posterior_unrestricted(rng, data, cfg.prior, cfg.draws, opt);
  ReplicationRecord rec;
  rec.report = summarize(s, cfg.levels);
  rec.report.scheme = describe(cfg.scheme);
  return rec;
}

namespace {

double true_value(const MOBWParams& t, Parameter p) {
  switch (p) {
    case Parameter::Alpha: return t.shape;
    case Parameter::Lambda0: return t.lambda0;
    case Parameter::Lambda1: return t.lambda1;
    case Parameter::Lambda2: return t.lambda2;
  }
  return 0.0;
}

}  // namespace

const IntervalCell& StudyResult::interval(Parameter p, double level, IntervalKind kind) const {
  for (const auto& c : intervals) {
    if (c.parameter == p && c.kind == kind && std::abs(c.level - level) < 1e-9) return c;
  }
  throw ValidationError("study has no such interval cell");
}

StudyResult aggregate(const StudyConfig& cfg, std::span<const ReplicationRecord> records) {
  StudyResult r;
  r.n = cfg.n;
  r.truth = cfg.truth;
  r.restricted = cfg.restricted;
  r.replications = records.size();
  std::vector<const ReplicationRecord*> ok;
  for (const auto& rec : records) {
    if (rec.failed) {
      ++r.failed;
    } else {
      ok.push_back(&rec);
    }
  }
  if (ok.empty()) throw StudyFailureError("every replication failed");
  const double inv = 1.0 / static_cast<double>(ok.size());

  for (Parameter p : kAllParameters) {
    const double truth = true_value(cfg.truth, p);
    auto& cell = r.estimates[static_cast<std::size_t>(p)];
    cell.parameter = p;
    cell.truth = truth;
    double sum = 0.0;
    double sq = 0.0;
    for (const auto* rec : ok) {
      const double e = rec->estimate(p);
      sum += e;
      sq += (e - truth) * (e - truth);
    }
    cell.average_estimate = sum * inv;
    cell.mse = sq * inv;

    for (double level : cfg.levels) {
      for (IntervalKind kind : {IntervalKind::Symmetric, IntervalKind::HPD}) {
        IntervalCell ic{p, level, kind};
        double len = 0.0;
        int hits = 0;
        for (const auto* rec : ok) {
          len += rec->report.at(p).interval(level, kind).length();
          hits += rec->covers(p, truth, level, kind);
        }
        ic.average_length = len * inv;
        ic.coverage_percent = 100.0 * static_cast<double>(hits) * inv;
        r.intervals.push_back(ic);
      }
    }
  }
  return r;
}

StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  std::vector<ReplicationRecord> records(cfg.replications);
  for_each_block(cfg.replications, 1, cfg.workers, cfg.master_seed,
                 [&](std::size_t b, std::size_t, Rng& rng) {
                   try {
                     records[b] = run_replication(rng, cfg);
                   } catch (const std::exception& e) {
                     records[b].failed = true;
                     records[b].failure = e.what();
                   }
                 });
  const auto failed = static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.failed; }));
  if (failed > 0 && failed * 100 >= cfg.replications) {
    const auto first = std::find_if(records.begin(), records.end(), [](const auto& r) { return r.failed; });
    std::ostringstream msg;
    msg << failed << " of " << cfg.replications
        << " replications failed (limit is below 1%); first failure: " << first->failure;
    throw StudyFailureError(msg.str());
  }
  return aggregate(cfg, records);
}

namespace {

std::string level_tag(double level) {
  // 0.95 -> "95", 0.975 -> "97.5"
  return format_double(std::round(level * 1e6) / 1e4);
}

}  // namespace

void write_study_csv(std::ostream& os, std::span<const StudyResult> results) {
  if (results.empty()) return;
  const auto& first = results.front();
  os << "n,alpha,lambda0,lambda1,lambda2,restricted,replications,failed,parameter,true,AE,MSE";
  for (const auto& c : first.intervals) {
    if (c.parameter != Parameter::Alpha) continue;
    const std::string tag = std::string(interval_kind_name(c.kind)) + "_" + level_tag(c.level);
    os << ",AL_" << tag << ",CP_" << tag;
  }
  os << '\n';
  for (const auto& r : results) {
    for (Parameter p : kAllParameters) {
      const auto& e = r.at(p);
      os << r.n << ',' << format_double(r.truth.shape) << ',' << format_double(r.truth.lambda0)
         << ',' << format_double(r.truth.lambda1) << ',' << format_double(r.truth.lambda2) << ','
         << (r.restricted ? 1 : 0) << ',' << r.replications << ',' << r.failed << ','
         << parameter_name(p) << ',' << format_double(e.truth) << ','
         << format_double(e.average_estimate) << ',' << format_double(e.mse);
      for (const auto& c : r.intervals) {
        if (c.parameter != p) continue;
        os << ',' << format_double(c.average_length) << ',' << format_double(c.coverage_percent);
      }
      os << '\n';
    }
  }
}

}  // namespace mobw
