#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "recyc/channel.hpp"
#include "recyc/power.hpp"
#include "recyc/scheduler.hpp"

namespace recyc {

enum class SchedulerKind { Fast, Exhaustive };
enum class LayoutKind { Hex, Ula };

const char* to_string(SchedulerKind kind);
const char* to_string(LayoutKind kind);

/// Identical coupling between every antenna pair (linear power ratio).
struct ScalarCoupling {
  double alpha = 0.0;
};

/// Explicit coupling table; sweeps over m use its leading block.
struct MatrixCoupling {
  std::string source;  // where the table came from, for the config record
  MatrixX<double> alpha;
};

/// Coupling derived from antenna geometry with a power-law decay in distance.
struct GeometryCoupling {
  LayoutKind layout = LayoutKind::Hex;
  double spacing = 1.0 / 3.0;  // wavelengths
  double alpha_ref_db = -10.3;
  std::optional<double> d_ref;  // defaults to spacing
  double exponent = 2.0;
};

using CouplingSpec = std::variant<ScalarCoupling, MatrixCoupling, GeometryCoupling>;

struct ExperimentConfig {
  int m = 4;
  std::optional<int> max_harvesters;
  CouplingSpec coupling = ScalarCoupling{};
  double mean_gain_db = -60.0;
  double snr_db = 10.0;
  /// Antenna count at which snr_db is calibrated into a budget. Sweeps over m
  /// pin it to the largest swept m so the budget stays fixed along the sweep.
  std::optional<int> snr_reference_m;
  std::int64_t n_samples = 100000;
  std::uint64_t seed = 1;
  SchedulerKind scheduler = SchedulerKind::Fast;
  /// Audit only: use |S|^2 = P(h) instead of drawing S ~ CN(0, P(h)).
  bool deterministic_symbol_power = false;
  /// 0 selects RECYC_MISO_THREADS or the hardware default. Never affects results.
  unsigned workers = 0;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  CouplingMatrix<double> resolve_coupling() const;

  /// Consumed-power budget P_c from the nominal received SNR,
  /// snr = P_c * m_ref * E[H_k] (full-array conjugate beamforming gain),
  /// with m_ref = snr_reference_m or m.
  double budget() const;

  double mean_gain() const;

  std::map<std::string, std::string> canonical_pairs() const;

  /// Sorted `key=value` pairs joined by single spaces.
  std::string canonical() const;
};

std::string join_pairs(const std::map<std::string, std::string>& pairs);

struct PointResult {
  double rate_ryc = 0.0;
  double rate_noryc = 0.0;
  double std_err_ryc = 0.0;
  double std_err_noryc = 0.0;
  double avg_active = 0.0;
  double budget = 0.0;
  double water_level_ryc = 0.0;
  double water_level_noryc = 0.0;
  /// Sample mean of P_new = P f; equals the budget up to solver tolerance.
  double consumed_power_ryc = 0.0;
};

struct SweepRow {
  double x = 0.0;
  double rate_ryc = 0.0;
  double rate_noryc = 0.0;
  double std_err_ryc = 0.0;
  double std_err_noryc = 0.0;
  double avg_active = 0.0;
  double gain_pct = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

struct ActiveRow {
  int m = 0;
  double avg_active = 0.0;
  double avg_harvesting = 0.0;
};

struct HarvestAudit {
  double analytic_harvest = 0.0;   // mean of P (1 - f)
  double simulated_harvest = 0.0;  // mean of sum_l |sum_k sqrt(alpha_kl) X_k|^2
  double diff_std_err = 0.0;       // standard error of simulated - analytic
  double cross_term = 0.0;         // mean of the m != n interference sum
  double cross_std_err = 0.0;
  double noise_harvest = 0.0;      // mean of sum_l |N_l|^2 over harvesting antennas
  std::int64_t n_samples = 0;
};

double gain_percent(double rate_ryc, double rate_noryc);

PointResult run_point(const ExperimentConfig& config);

SweepResult sweep_m(const ExperimentConfig& config, const std::vector<int>& m_values);

SweepResult sweep_harvest_cap(const ExperimentConfig& config, const std::vector<int>& caps);

std::vector<ActiveRow> avg_active_sweep(const ExperimentConfig& config,
                                        const std::vector<int>& m_values);

/// Largest delta such that the recycling system with m - delta antennas still
/// reaches the classical rate at m antennas.
int antenna_penalty(const SweepResult& result, int m);

HarvestAudit verify_harvest_identity(const ExperimentConfig& config);

}  // namespace recyc
