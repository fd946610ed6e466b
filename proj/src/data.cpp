#include <mobw/data.hpp>

#include <mobw/errors.hpp>
#include <mobw/numeric.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace mobw {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> to_count(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

void require_positive_time(double tau, const char* what) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ValidationError(std::string(what) + " must be a positive time");
  }
}

}  // namespace

std::string describe(const CensoringScheme& s) {
  return std::visit(
      overloaded{
          [](const scheme::Complete&) { return std::string("complete"); },
          [](const scheme::TypeI& c) { return "type1:tau=" + format_double(c.tau); },
          [](const scheme::TypeII& c) { return "type2:r=" + std::to_string(c.r); },
          [](const scheme::HybridI& c) {
            return "hybrid1:r=" + std::to_string(c.r) + ",tau=" + format_double(c.tau);
          },
          [](const scheme::HybridII& c) {
            return "hybrid2:r=" + std::to_string(c.r) + ",tau=" + format_double(c.tau);
          },
          [](const scheme::ProgressiveI& c) {
            std::string out = "progressive1:tau=" + join(c.epochs);
            if (!c.removals.empty()) out += ",R=" + join(c.removals);
            return out;
          },
          [](const scheme::ProgressiveII& c) { return "progressive2:R=" + join(c.removals); },
      },
      s);
}

CensoringScheme parse_scheme(std::string_view text) {
  text = trim(text);
  const auto colon = text.find(':');
  std::string name(trim(text.substr(0, colon)));
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

  std::map<std::string, std::string, std::less<>> args;
  if (colon != std::string_view::npos) {
    for (auto kv : split(text.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos) {
        throw ValidationError("scheme argument '" + std::string(kv) + "' is not key=value");
      }
      args.emplace(std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1))));
    }
  }

  auto take = [&](const char* key) -> std::string {
    auto it = args.find(key);
    if (it == args.end()) throw ValidationError("scheme '" + name + "' needs " + key + "=");
    std::string v = it->second;
    args.erase(it);
    return v;
  };
  auto number = [&](const char* key) {
    auto v = take(key);
    auto d = to_double(v);
    if (!d) throw ValidationError(std::string(key) + "='" + v + "' is not a number");
    return *d;
  };
  auto count = [&](const char* key) {
    auto v = take(key);
    auto c = to_count(v);
    if (!c) throw ValidationError(std::string(key) + "='" + v + "' is not a count");
    return *c;
  };
  auto numbers = [&](const char* key) {
    std::vector<double> out;
    for (auto part : split(take(key), ';')) {
      auto d = to_double(part);
      if (!d) throw ValidationError(std::string(key) + " entry '" + std::string(part) + "' is not a number");
      out.push_back(*d);
    }
    return out;
  };
  auto counts = [&](const char* key) {
    std::vector<std::size_t> out;
    for (auto part : split(take(key), ';')) {
      auto c = to_count(part);
      if (!c) throw ValidationError(std::string(key) + " entry '" + std::string(part) + "' is not a count");
      out.push_back(*c);
    }
    return out;
  };

  CensoringScheme result;
  if (name == "complete") {
    result = scheme::Complete{};
  } else if (name == "type1") {
    result = scheme::TypeI{number("tau")};
  } else if (name == "type2") {
    result = scheme::TypeII{count("r")};
  } else if (name == "hybrid1") {
    const auto r = count("r");
    result = scheme::HybridI{r, number("tau")};
  } else if (name == "hybrid2") {
    const auto r = count("r");
    result = scheme::HybridII{r, number("tau")};
  } else if (name == "progressive1") {
    scheme::ProgressiveI p;
    p.epochs = numbers("tau");
    if (args.count("R")) p.removals = counts("R");
    result = std::move(p);
  } else if (name == "progressive2") {
    result = scheme::ProgressiveII{counts("R")};
  } else {
    throw ValidationError("unknown censoring scheme '" + name + "'");
  }
  if (!args.empty()) {
    throw ValidationError("unexpected argument '" + args.begin()->first + "' for scheme " + name);
  }
  validate(result);
  return result;
}

void validate(const CensoringScheme& s) {
  std::visit(overloaded{
                 [](const scheme::Complete&) {},
                 [](const scheme::TypeI& c) { require_positive_time(c.tau, "type1 tau"); },
                 [](const scheme::TypeII& c) {
                   if (c.r < 1) throw ValidationError("type2 r must be >= 1");
                 },
                 [](const scheme::HybridI& c) {
                   if (c.r < 1) throw ValidationError("hybrid1 r must be >= 1");
                   require_positive_time(c.tau, "hybrid1 tau");
                 },
                 [](const scheme::HybridII& c) {
                   if (c.r < 1) throw ValidationError("hybrid2 r must be >= 1");
                   require_positive_time(c.tau, "hybrid2 tau");
                 },
                 [](const scheme::ProgressiveI& c) {
                   if (c.epochs.empty()) throw ValidationError("progressive1 needs at least one epoch");
                   for (std::size_t i = 0; i < c.epochs.size(); ++i) {
                     require_positive_time(c.epochs[i], "progressive1 epoch");
                     if (i && !(c.epochs[i - 1] < c.epochs[i])) {
                       throw ValidationError("progressive1 epochs must be strictly increasing");
                     }
                   }
                   if (c.removals.size() + 1 != c.epochs.size()) {
                     throw ValidationError("progressive1 needs k-1 removals for k epochs");
                   }
                 },
                 [](const scheme::ProgressiveII& c) {
                   if (c.removals.empty()) throw ValidationError("progressive2 needs m >= 1 removals");
                 },
             },
             s);
}

double SufficientStats::exposure(double alpha) const {
  double d = 0.0;
  for (const auto& term : exposure_terms) d += term.weight * std::exp(alpha * term.log_time);
  return d;
}

namespace {

void add_observed(std::vector<ExposureTerm>& terms, const std::vector<Observation>& obs) {
  for (const auto& o : obs) terms.push_back({1.0, std::log(o.time)});
}

void add_time_censored(std::vector<ExposureTerm>& terms, const std::vector<Observation>& obs,
                       std::size_t units, double tau) {
  for (const auto& o : obs) {
    if (o.time > tau) throw ValidationError("observed failure after the termination time");
  }
  add_observed(terms, obs);
  if (units > obs.size()) terms.push_back({static_cast<double>(units - obs.size()), std::log(tau)});
}

void add_failure_censored(std::vector<ExposureTerm>& terms, const std::vector<Observation>& obs,
                          std::size_t units) {
  add_observed(terms, obs);
  if (units > obs.size()) {
    terms.push_back({static_cast<double>(units - obs.size()), std::log(obs.back().time)});
  }
}

std::vector<ExposureTerm> compile_exposure(const std::vector<Observation>& obs,
                                           const CensoringScheme& s, std::size_t units) {
  std::vector<ExposureTerm> terms;
  const std::size_t n_star = obs.size();
  if (n_star > units) throw ValidationError("more observed failures than units on test");

  std::visit(
      overloaded{
          [&](const scheme::Complete&) {
            if (n_star != units) {
              throw ValidationError("complete sample must observe every unit");
            }
            if (n_star == 0) throw ValidationError("complete sample is empty");
            add_observed(terms, obs);
          },
          [&](const scheme::TypeI& c) { add_time_censored(terms, obs, units, c.tau); },
          [&](const scheme::TypeII& c) {
            if (c.r > units) throw ValidationError("type2 r exceeds the number of units");
            if (n_star != c.r) {
              throw ValidationError("type2 with r=" + std::to_string(c.r) + " needs exactly r failures, got " +
                                    std::to_string(n_star));
            }
            add_failure_censored(terms, obs, units);
          },
          [&](const scheme::HybridI& c) {
            // stop at min(t_r, tau)
            if (c.r > units) throw ValidationError("hybrid1 r exceeds the number of units");
            if (n_star > c.r) throw ValidationError("hybrid1 observed more than r failures");
            if (n_star == c.r && obs.back().time <= c.tau) {
              add_failure_censored(terms, obs, units);
            } else {
              add_time_censored(terms, obs, units, c.tau);
            }
          },
          [&](const scheme::HybridII& c) {
            // stop at max(t_r, tau)
            if (c.r > units) throw ValidationError("hybrid2 r exceeds the number of units");
            if (n_star < c.r) throw ValidationError("hybrid2 observed fewer than r failures");
            if (n_star == c.r && obs.back().time >= c.tau) {
              add_failure_censored(terms, obs, units);
            } else {
              add_time_censored(terms, obs, units, c.tau);
            }
          },
          [&](const scheme::ProgressiveI& c) {
            const std::size_t k = c.epochs.size();
            std::size_t failed = 0;
            std::size_t removed = 0;
            std::size_t next = 0;
            for (std::size_t i = 0; i < k; ++i) {
              while (next < n_star && obs[next].time <= c.epochs[i]) {
                ++next;
                ++failed;
              }
              const std::size_t planned = i + 1 < k ? c.removals[i] : 0;
              if (failed + removed + planned > units) {
                throw ValidationError("progressive1 removal at epoch " + std::to_string(i + 1) +
                                      " exceeds the surviving units");
              }
              removed += planned;
            }
            if (next != n_star) throw ValidationError("progressive1 failure observed after the last epoch");
            add_observed(terms, obs);
            for (std::size_t i = 0; i + 1 < k; ++i) {
              if (c.removals[i] > 0) {
                terms.push_back({static_cast<double>(c.removals[i]), std::log(c.epochs[i])});
              }
            }
            const std::size_t last = units - n_star - removed;
            if (last > 0) terms.push_back({static_cast<double>(last), std::log(c.epochs.back())});
          },
          [&](const scheme::ProgressiveII& c) {
            const std::size_t m = c.removals.size();
            const std::size_t total = m + std::accumulate(c.removals.begin(), c.removals.end(), std::size_t{0});
            if (total != units) {
              throw ValidationError("progressive2 needs m + sum(R) = n (" + std::to_string(total) +
                                    " vs " + std::to_string(units) + ")");
            }
            if (n_star != m) {
              throw ValidationError("progressive2 with m=" + std::to_string(m) + " needs exactly m failures, got " +
                                    std::to_string(n_star));
            }
            for (std::size_t i = 0; i < m; ++i) {
              terms.push_back({static_cast<double>(c.removals[i] + 1), std::log(obs[i].time)});
            }
          },
      },
      s);
  return terms;
}

}  // namespace

CompetingRisksDataset::CompetingRisksDataset(std::vector<Observation> observations,
                                             CensoringScheme scheme, std::size_t units,
                                             bool terminated_early)
    : observations_(std::move(observations)),
      scheme_(std::move(scheme)),
      units_(units),
      terminated_early_(terminated_early) {
  validate(scheme_);
  for (const auto& o : observations_) {
    if (!(o.time > 0.0) || !std::isfinite(o.time)) {
      throw ValidationError("failure times must be positive and finite");
    }
    const int c = static_cast<int>(o.cause);
    if (c < 0 || c > 2) throw ValidationError("cause must be 0, 1 or 2");
  }
  std::stable_sort(observations_.begin(), observations_.end(),
                   [](const Observation& x, const Observation& y) { return x.time < y.time; });

  stats_.n_star = observations_.size();
  for (const auto& o : observations_) {
    ++stats_.cause_counts[static_cast<int>(o.cause)];
    stats_.sum_log_time += std::log(o.time);
  }
  stats_.exposure_terms = compile_exposure(observations_, scheme_, units_);

  if (degenerate()) {
    warnings_.push_back("no failures observed before termination");
  } else {
    for (int c = 0; c < 3; ++c) {
      if (stats_.cause_counts[c] == 0) {
        warnings_.push_back("no failures with cause " + std::to_string(c));
      }
    }
  }
  if (terminated_early_) {
    warnings_.push_back("progressive removal exceeded the survivors; experiment terminated early");
  }
}

double CompetingRisksDataset::exposure(double alpha) const {
  if (!(alpha > 0.0)) throw DomainError("exposure: alpha must be > 0");
  return stats_.exposure(alpha);
}

std::vector<Observation> read_observations(const std::filesystem::path& path, double time_divisor) {
  if (!(time_divisor > 0.0) || !std::isfinite(time_divisor)) {
    throw ValidationError("time divisor must be positive");
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");

  const std::string source = path.string();
  std::vector<Observation> obs;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    auto fields = split(body, ',');
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 2 && fields[0] == "time" && fields[1] == "cause") continue;
      throw ParseError(source, line_no, "expected header 'time,cause'");
    }
    if (fields.size() != 2) throw ParseError(source, line_no, "expected two columns");
    auto t = to_double(fields[0]);
    if (!t) throw ParseError(source, line_no, "time '" + std::string(fields[0]) + "' is not a number");
    auto c = to_count(fields[1]);
    if (!c) throw ParseError(source, line_no, "cause '" + std::string(fields[1]) + "' is not an integer");
    if (*c > 2) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": cause must be 0, 1 or 2");
    }
    if (!(*t > 0.0) || !std::isfinite(*t)) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": time must be positive");
    }
    obs.push_back({*t / time_divisor, static_cast<Cause>(*c)});
  }
  if (obs.empty()) throw ValidationError("dataset '" + source + "' has no observations");
  return obs;
}

CompetingRisksDataset load_dataset(const std::filesystem::path& path, double time_divisor,
                                   const CensoringScheme& scheme,
                                   std::optional<std::size_t> units) {
  auto obs = read_observations(path, time_divisor);
  std::size_t n = obs.size();
  if (const auto* p2 = std::get_if<scheme::ProgressiveII>(&scheme)) {
    n = p2->removals.size() +
        std::accumulate(p2->removals.begin(), p2->removals.end(), std::size_t{0});
    if (units && *units != n) throw ValidationError("units disagree with the progressive2 plan");
  } else if (!std::holds_alternative<scheme::Complete>(scheme)) {
    if (!units) throw ValidationError("censored schemes need the number of units on test");
    n = *units;
  } else if (units && *units != n) {
    throw ValidationError("complete sample: units must equal the number of rows");
  }
  return CompetingRisksDataset(std::move(obs), scheme, n);
}

void write_observations(const std::filesystem::path& path, std::span<const Observation> obs) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << "time,cause\n";
  for (const auto& o : obs) out << format_double(o.time) << ',' << static_cast<int>(o.cause) << '\n';
}

namespace {

// Removes `count` uniformly chosen entries from `alive`.
void withdraw(std::vector<Observation>& alive, std::size_t count, Rng& rng) {
  for (std::size_t j = 0; j < count; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, alive.size() - 1);
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
  }
}

}  // namespace

CompetingRisksDataset apply_censoring(std::span<const Observation> complete,
                                      const CensoringScheme& s, Rng& rng,
                                      InfeasibleRemoval policy) {
  validate(s);
  std::vector<Observation> sorted(complete.begin(), complete.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Observation& x, const Observation& y) { return x.time < y.time; });
  const std::size_t n = sorted.size();

  auto first = [&](std::size_t r) {
    return std::vector<Observation>(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(r));
  };
  auto until = [&](double tau) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), tau,
                               [](double t, const Observation& o) { return t < o.time; });
    return std::vector<Observation>(sorted.begin(), it);
  };
  auto check_r = [&](std::size_t r) {
    if (r < 1 || r > n) throw ValidationError("r must lie in [1, n]");
  };

  return std::visit(
      overloaded{
          [&](const scheme::Complete&) { return CompetingRisksDataset(sorted, s, n); },
          [&](const scheme::TypeI& c) { return CompetingRisksDataset(until(c.tau), s, n); },
          [&](const scheme::TypeII& c) {
            check_r(c.r);
            return CompetingRisksDataset(first(c.r), s, n);
          },
          [&](const scheme::HybridI& c) {
            check_r(c.r);
            if (sorted[c.r - 1].time <= c.tau) return CompetingRisksDataset(first(c.r), s, n);
            return CompetingRisksDataset(until(c.tau), s, n);
          },
          [&](const scheme::HybridII& c) {
            check_r(c.r);
            if (sorted[c.r - 1].time >= c.tau) return CompetingRisksDataset(first(c.r), s, n);
            return CompetingRisksDataset(until(c.tau), s, n);
          },
          [&](const scheme::ProgressiveI& c) {
            std::vector<Observation> alive = sorted;
            std::vector<Observation> observed;
            const std::size_t k = c.epochs.size();
            for (std::size_t i = 0; i < k; ++i) {
              auto split_at = std::upper_bound(
                  alive.begin(), alive.end(), c.epochs[i],
                  [](double t, const Observation& o) { return t < o.time; });
              observed.insert(observed.end(), alive.begin(), split_at);
              alive.erase(alive.begin(), split_at);
              if (i + 1 == k) break;
              if (c.removals[i] > alive.size()) {
                if (policy == InfeasibleRemoval::Throw) {
                  throw ValidationError("progressive1 removal of " + std::to_string(c.removals[i]) +
                                        " units at epoch " + std::to_string(i + 1) + " exceeds " +
                                        std::to_string(alive.size()) + " survivors");
                }
                scheme::ProgressiveI truncated;
                truncated.epochs.assign(c.epochs.begin(), c.epochs.begin() + static_cast<std::ptrdiff_t>(i + 1));
                truncated.removals.assign(c.removals.begin(), c.removals.begin() + static_cast<std::ptrdiff_t>(i));
                return CompetingRisksDataset(std::move(observed), std::move(truncated), n, true);
              }
              withdraw(alive, c.removals[i], rng);
            }
            return CompetingRisksDataset(std::move(observed), s, n);
          },
          [&](const scheme::ProgressiveII& c) {
            const std::size_t m = c.removals.size();
            const std::size_t total = m + std::accumulate(c.removals.begin(), c.removals.end(), std::size_t{0});
            if (total != n) throw ValidationError("progressive2 needs m + sum(R) = n");
            std::vector<Observation> alive = sorted;
            std::vector<Observation> observed;
            for (std::size_t i = 0; i < m; ++i) {
              observed.push_back(alive.front());
              alive.erase(alive.begin());
              withdraw(alive, c.removals[i], rng);
            }
            return CompetingRisksDataset(std::move(observed), s, n);
          },
      },
      s);
}

}  // namespace mobw
