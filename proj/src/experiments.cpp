#include "recyc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "recyc/csv.hpp"
#include "recyc/parallel.hpp"
#include "recyc/units.hpp"

namespace recyc {

const char* to_string(SchedulerKind kind) {
  return kind == SchedulerKind::Fast ? "fast" : "exhaustive";
}

const char* to_string(LayoutKind kind) { return kind == LayoutKind::Hex ? "hex" : "ula"; }

namespace {

template <class... Ts>
struct Visitor : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Visitor(Ts...) -> Visitor<Ts...>;

}  // namespace

void ExperimentConfig::validate() const {
  if (m < 1) throw ConfigError("m", "antenna count must be >= 1");
  if (n_samples < 1) throw ConfigError("n_samples", "must be >= 1");
  if (max_harvesters && *max_harvesters < 0)
    throw ConfigError("max_harvesters", "must be >= 0");
  if (!std::isfinite(mean_gain_db)) throw ConfigError("mean_gain_db", "must be finite");
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db", "must be finite");
  if (snr_reference_m && *snr_reference_m < 1)
    throw ConfigError("snr_reference_m", "must be >= 1");

  if (const auto* s = std::get_if<ScalarCoupling>(&coupling)) {
    if (!(s->alpha >= 0.0 && s->alpha < 1.0))
      throw ConfigError("alpha", "coupling must lie in [0, 1)");
  } else if (const auto* t = std::get_if<MatrixCoupling>(&coupling)) {
    if (t->alpha.rows() < m)
      throw ConfigError("coupling_file", "table has " + std::to_string(t->alpha.rows()) +
                                             " antennas, config needs " + std::to_string(m));
    try {
      (void)CouplingMatrix<double>::from_matrix(t->alpha);
    } catch (const Error& e) {
      throw ConfigError("coupling_file", e.what());
    }
  } else {
    const auto& geo = std::get<GeometryCoupling>(coupling);
    if (!(geo.spacing > 0.0)) throw ConfigError("spacing", "must be > 0");
    if (!(geo.alpha_ref_db < 0.0)) throw ConfigError("alpha_ref_db", "must be < 0 dB");
    if (geo.d_ref && !(*geo.d_ref > 0.0)) throw ConfigError("d_ref", "must be > 0");
    if (!(geo.exponent >= 0.0)) throw ConfigError("exponent", "must be >= 0");
  }
  if (scheduler == SchedulerKind::Fast && !resolve_coupling().symmetric_scalar())
    throw ConfigError("scheduler", "fast scheduler requires constant coupling; use exhaustive");
}

CouplingMatrix<double> ExperimentConfig::resolve_coupling() const {
  return std::visit(
      Visitor{[&](const ScalarCoupling& s) { return CouplingMatrix<double>::symmetric(m, s.alpha); },
              [&](const MatrixCoupling& t) {
                return CouplingMatrix<double>::from_matrix(t.alpha).leading(m);
              },
              [&](const GeometryCoupling& g) {
                const AntennaLayout layout =
                    g.layout == LayoutKind::Hex ? hex_layout(m, g.spacing) : ula_layout(m, g.spacing);
                return coupling_from_layout(layout, db_to_linear(g.alpha_ref_db),
                                            g.d_ref.value_or(g.spacing), g.exponent);
              }},
      coupling);
}

double ExperimentConfig::mean_gain() const { return db_to_linear(mean_gain_db); }

double ExperimentConfig::budget() const {
  return db_to_linear(snr_db) / (static_cast<double>(snr_reference_m.value_or(m)) * mean_gain());
}

std::map<std::string, std::string> ExperimentConfig::canonical_pairs() const {
  std::map<std::string, std::string> kv;
  kv["m"] = std::to_string(m);
  kv["max_harvesters"] = max_harvesters ? std::to_string(*max_harvesters) : "none";
  kv["mean_gain_db"] = format_number(mean_gain_db);
  kv["snr_db"] = format_number(snr_db);
  if (snr_reference_m) kv["snr_reference_m"] = std::to_string(*snr_reference_m);
  kv["n_samples"] = std::to_string(n_samples);
  kv["seed"] = std::to_string(seed);
  kv["scheduler"] = to_string(scheduler);
  kv["budget"] = format_number(budget());
  if (deterministic_symbol_power) kv["deterministic_symbol_power"] = "true";
  std::visit(Visitor{[&](const ScalarCoupling& s) {
                       kv["coupling"] = "scalar";
                       kv["alpha"] = format_number(s.alpha);
                     },
                     [&](const MatrixCoupling& t) {
                       kv["coupling"] = "matrix";
                       kv["coupling_file"] = t.source;
                     },
                     [&](const GeometryCoupling& g) {
                       kv["coupling"] = "geometry";
                       kv["layout"] = to_string(g.layout);
                       kv["spacing"] = format_number(g.spacing);
                       kv["alpha_ref_db"] = format_number(g.alpha_ref_db);
                       kv["d_ref"] = format_number(g.d_ref.value_or(g.spacing));
                       kv["exponent"] = format_number(g.exponent);
                     }},
             coupling);
  return kv;
}

std::string join_pairs(const std::map<std::string, std::string>& pairs) {
  std::string out;
  for (const auto& [k, v] : pairs) {
    if (!out.empty()) out += ' ';
    out += k + '=' + v;
  }
  return out;
}

std::string ExperimentConfig::canonical() const { return join_pairs(canonical_pairs()); }

double gain_percent(double rate_ryc, double rate_noryc) {
  return rate_noryc > 0.0 ? 100.0 * (rate_ryc - rate_noryc) / rate_noryc : 0.0;
}

namespace {

constexpr std::uint32_t kChannelDomain = 0;
constexpr std::uint32_t kSymbolDomain = 1;

/// Per-draw outputs of the recycling scheduler and the classical baseline.
struct Draws {
  VectorX<double> g_ryc;
  VectorX<double> g_noryc;
  VectorX<double> f;
  std::vector<std::uint64_t> harvest_mask;
  std::vector<int> active_count;
};

struct Scheduler {
  SchedulerKind kind;
  CouplingMatrix<double> coupling;
  SchedulerLimits limits;

  Schedule<double> operator()(const VectorX<double>& h) const {
    if (kind == SchedulerKind::Fast) return schedule_fast(h, *coupling.symmetric_scalar(), limits);
    return schedule_exhaustive(h, coupling, limits);
  }
};

Scheduler make_scheduler(const ExperimentConfig& config) {
  config.validate();
  SchedulerLimits limits;
  if (config.max_harvesters) limits.max_harvesters = std::min(*config.max_harvesters, config.m - 1);
  return {config.scheduler, config.resolve_coupling(), limits};
}

Draws draw_and_schedule(const ExperimentConfig& config, const Scheduler& scheduler) {
  const auto n = config.n_samples;
  const double mean_gain = config.mean_gain();
  Draws d;
  d.g_ryc.resize(n);
  d.g_noryc.resize(n);
  d.f.resize(n);
  d.harvest_mask.assign(static_cast<std::size_t>(n), 0);
  d.active_count.assign(static_cast<std::size_t>(n), 0);
  parallel_for(n, resolve_workers(config.workers), [&](std::int64_t i) {
    SampleStream stream(config.seed, static_cast<std::uint64_t>(i), kChannelDomain);
    const auto sample = draw_channel(stream, config.m, mean_gain);
    const auto schedule = scheduler(sample.powers);
    d.g_ryc(i) = schedule.g;
    d.g_noryc(i) = sample.powers.sum();
    d.f(i) = schedule.f;
    std::uint64_t mask = (config.m >= 64 ? ~0ULL : (1ULL << config.m) - 1);
    for (int k : schedule.active) mask &= ~(1ULL << k);
    d.harvest_mask[i] = mask;
    d.active_count[i] = static_cast<int>(schedule.active.size());
  });
  return d;
}

double mean_of(const std::vector<int>& v) {
  double s = 0.0;
  for (int x : v) s += x;
  return s / static_cast<double>(v.size());
}

SweepRow to_row(double x, const PointResult& p) {
  return {x,           p.rate_ryc,   p.rate_noryc, p.std_err_ryc, p.std_err_noryc,
          p.avg_active, gain_percent(p.rate_ryc, p.rate_noryc)};
}

}  // namespace

PointResult run_point(const ExperimentConfig& config) {
  const Scheduler scheduler = make_scheduler(config);
  const Draws d = draw_and_schedule(config, scheduler);
  const double budget = config.budget();

  const GainSamples<double> ryc(d.g_ryc, PowerMode::Recycling);
  const GainSamples<double> noryc(d.g_noryc, PowerMode::NonRecycling);
  const auto policy_ryc = solve_water_level(ryc, budget);
  const auto policy_noryc = solve_water_level(noryc, budget);
  const auto rate_ryc = ergodic_rate(ryc, policy_ryc);
  const auto rate_noryc = ergodic_rate(noryc, policy_noryc);

  PointResult out;
  out.rate_ryc = rate_ryc.rate;
  out.rate_noryc = rate_noryc.rate;
  out.std_err_ryc = rate_ryc.std_err;
  out.std_err_noryc = rate_noryc.std_err;
  out.avg_active = mean_of(d.active_count);
  out.budget = budget;
  out.water_level_ryc = policy_ryc.water_level;
  out.water_level_noryc = policy_noryc.water_level;
  out.consumed_power_ryc = mean_allocated_power(ryc, policy_ryc.water_level);
  return out;
}

SweepResult sweep_m(const ExperimentConfig& config, const std::vector<int>& m_values) {
  SweepResult result;
  std::vector<int> ms = m_values;
  std::sort(ms.begin(), ms.end());
  for (int m : ms) {
    ExperimentConfig point = config;
    point.m = m;
    if (!point.snr_reference_m && !ms.empty()) point.snr_reference_m = ms.back();
    result.rows.push_back(to_row(m, run_point(point)));
  }
  return result;
}

SweepResult sweep_harvest_cap(const ExperimentConfig& config, const std::vector<int>& caps) {
  SweepResult result;
  for (int cap : caps) {
    ExperimentConfig point = config;
    point.max_harvesters = cap;
    result.rows.push_back(to_row(cap, run_point(point)));
  }
  return result;
}

std::vector<ActiveRow> avg_active_sweep(const ExperimentConfig& config,
                                        const std::vector<int>& m_values) {
  std::vector<ActiveRow> rows;
  std::vector<int> ms = m_values;
  std::sort(ms.begin(), ms.end());
  for (int m : ms) {
    ExperimentConfig point = config;
    point.m = m;
    const Draws d = draw_and_schedule(point, make_scheduler(point));
    const double active = mean_of(d.active_count);
    rows.push_back({m, active, m - active});
  }
  return rows;
}

int antenna_penalty(const SweepResult& result, int m) {
  auto rate_at = [&](int x) -> const SweepRow* {
    for (const auto& row : result.rows)
      if (row.x == x) return &row;
    return nullptr;
  };
  const SweepRow* target = rate_at(m);
  require(target != nullptr, ErrorKind::InvalidParameter,
          "antenna_penalty: m = " + std::to_string(m) + " not in sweep");
  int penalty = 0;
  for (int delta = 1; delta < m; ++delta) {
    const SweepRow* row = rate_at(m - delta);
    if (row == nullptr) break;
    if (row->rate_ryc >= target->rate_noryc) penalty = delta;
  }
  return penalty;
}

HarvestAudit verify_harvest_identity(const ExperimentConfig& config) {
  const Scheduler scheduler = make_scheduler(config);
  const Draws d = draw_and_schedule(config, scheduler);
  const GainSamples<double> ryc(d.g_ryc, PowerMode::Recycling);
  const auto policy = solve_water_level(ryc, config.budget());

  const auto n = config.n_samples;
  const int m = config.m;
  const double mean_gain = config.mean_gain();
  const MatrixX<double> root_alpha = scheduler.coupling.alpha().cwiseSqrt();
  VectorX<double> analytic(n), simulated(n), cross(n), noise(n);

  parallel_for(n, resolve_workers(config.workers), [&](std::int64_t i) {
    SampleStream channel_stream(config.seed, static_cast<std::uint64_t>(i), kChannelDomain);
    const auto sample = draw_channel(channel_stream, m, mean_gain);
    const std::uint64_t harvest = d.harvest_mask[i];

    // Transmit power P = P_new / f; the budget constrains P_new.
    const double p_new = allocate(policy, d.g_ryc(i));
    const double power = p_new / d.f(i);

    SampleStream symbol_stream(config.seed, static_cast<std::uint64_t>(i), kSymbolDomain);
    std::complex<double> s;
    if (config.deterministic_symbol_power) {
      s = std::sqrt(power);
    } else {
      const double sigma = std::sqrt(power / 2.0);
      const double re = symbol_stream.normal(sigma);
      const double im = symbol_stream.normal(sigma);
      s = {re, im};
    }

    IndexSet active;
    for (int k = 0; k < m; ++k)
      if (!(harvest >> k & 1ULL)) active.push_back(k);
    const VectorX<std::complex<double>> x = s * beamform_weights(sample, active);

    double harvested = 0.0;
    double off_diagonal = 0.0;
    double noise_power = 0.0;
    for (int l = 0; l < m; ++l) {
      if (!(harvest >> l & 1ULL)) continue;
      std::complex<double> z = 0.0;
      for (int k : active) z += root_alpha(k, l) * x(k);
      harvested += std::norm(z);
      for (int a : active)
        for (int b : active)
          if (a != b) off_diagonal += (root_alpha(a, l) * root_alpha(b, l) * x(a) * std::conj(x(b))).real();
      const double nr = symbol_stream.normal(std::sqrt(0.5));
      const double ni = symbol_stream.normal(std::sqrt(0.5));
      noise_power += nr * nr + ni * ni;
    }
    analytic(i) = power * (1.0 - d.f(i));
    simulated(i) = harvested;
    cross(i) = off_diagonal;
    noise(i) = noise_power;
  });

  auto std_err = [](const VectorX<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = v.mean();
    return std::sqrt((v.array() - mu).square().sum() / double(v.size() - 1) / double(v.size()));
  };
  HarvestAudit audit;
  audit.analytic_harvest = analytic.mean();
  audit.simulated_harvest = simulated.mean();
  audit.diff_std_err = std_err(simulated - analytic);
  audit.cross_term = cross.mean();
  audit.cross_std_err = std_err(cross);
  audit.noise_harvest = noise.mean();
  audit.n_samples = n;
  return audit;
}

}  // namespace recyc
