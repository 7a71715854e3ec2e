#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "recyc/channel.hpp"
#include "recyc/error.hpp"
#include "recyc/scheduler.hpp"

namespace recyc {

enum class PowerMode { Recycling, NonRecycling };

inline const char* to_string(PowerMode mode) {
  return mode == PowerMode::Recycling ? "recycling" : "non-recycling";
}

template <typename Scalar = double>
struct PowerPolicy {
  Scalar water_level{};
  Scalar target_budget{};
  PowerMode mode = PowerMode::NonRecycling;
};

/// Effective gains of N channel draws, one per draw: g_max for the recycling
/// system, sum_k h_k for the classical one.
template <typename Scalar = double>
class GainSamples {
 public:
  GainSamples(VectorX<Scalar> values, PowerMode provenance)
      : values_(std::move(values)), provenance_(provenance) {
    require(values_.size() >= 1, ErrorKind::InvalidParameter, "GainSamples: no samples");
    for (Eigen::Index n = 0; n < values_.size(); ++n)
      require(values_(n) > Scalar(0) && std::isfinite(double(values_(n))),
              ErrorKind::DegenerateChannel,
              "GainSamples: gain " + std::to_string(n) + " is not positive and finite");
  }

  const VectorX<Scalar>& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  PowerMode provenance() const { return provenance_; }

 private:
  VectorX<Scalar> values_;
  PowerMode provenance_;
};

/// (lambda - 1/g)^+
template <typename Scalar>
Scalar allocate(const PowerPolicy<Scalar>& policy, Scalar g) {
  require(g > Scalar(0), ErrorKind::InvalidParameter, "allocate: gain must be positive");
  const Scalar p = policy.water_level - Scalar(1) / g;
  return p > Scalar(0) ? p : Scalar(0);
}

template <typename Scalar>
Scalar mean_allocated_power(const GainSamples<Scalar>& samples, Scalar water_level) {
  return (water_level - samples.values().array().inverse()).cwiseMax(Scalar(0)).mean();
}

/// Water level meeting the sample-average power budget. Bisection on
/// [0, budget + max 1/g], run to floating-point resolution; the mean allocated
/// power is continuous and nondecreasing in the level.
template <typename Scalar>
PowerPolicy<Scalar> solve_water_level(const GainSamples<Scalar>& samples, Scalar budget,
                                      Scalar tol = Scalar(1e-6), int max_iterations = 200) {
  require(budget >= Scalar(0), ErrorKind::InvalidParameter,
          "solve_water_level: budget must be nonnegative");
  require(tol > Scalar(0), ErrorKind::InvalidParameter, "solve_water_level: tol must be positive");
  const auto inverse = samples.values().array().inverse().eval();
  const Scalar floor = inverse.minCoeff();
  PowerPolicy<Scalar> policy{floor, budget, samples.provenance()};
  if (budget == Scalar(0)) return policy;

  auto mean_power = [&](Scalar level) { return (level - inverse).cwiseMax(Scalar(0)).mean(); };
  Scalar lo = floor;
  Scalar hi = budget + inverse.maxCoeff();
  for (int it = 0; it < max_iterations; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    if (mid <= lo || mid >= hi) break;
    (mean_power(mid) < budget ? lo : hi) = mid;
  }
  const Scalar err_lo = std::abs(mean_power(lo) - budget);
  const Scalar err_hi = std::abs(mean_power(hi) - budget);
  policy.water_level = err_lo <= err_hi ? lo : hi;
  const Scalar err = std::min(err_lo, err_hi);
  // Budgets far below lambda * epsilon cannot be met more finely than one ulp of lambda.
  const bool at_resolution = lo + (hi - lo) / Scalar(2) <= lo || lo + (hi - lo) / Scalar(2) >= hi;
  if (err > tol * budget && !at_resolution)
    throw Error(ErrorKind::NoConvergence,
                "solve_water_level: budget error " + std::to_string(double(err / budget)) +
                    " above tolerance after " + std::to_string(max_iterations) + " iterations");
  return policy;
}

template <typename Scalar = double>
struct RateEstimate {
  Scalar rate{};     // bits per channel use
  Scalar std_err{};  // bits
};

/// Sample mean of log2(1 + P(g) g) with its standard error.
template <typename Scalar>
RateEstimate<Scalar> ergodic_rate(const GainSamples<Scalar>& samples,
                                  const PowerPolicy<Scalar>& policy) {
  const auto& g = samples.values().array();
  const auto power = (policy.water_level - g.inverse()).cwiseMax(Scalar(0));
  const VectorX<Scalar> per_draw = (Scalar(1) + power * g).log() / std::log(Scalar(2));
  const auto n = static_cast<Scalar>(per_draw.size());
  const Scalar mean = per_draw.mean();
  Scalar std_err{0};
  if (per_draw.size() > 1) {
    const Scalar var = (per_draw.array() - mean).square().sum() / (n - Scalar(1));
    std_err = std::sqrt(var / n);
  }
  return {mean, std_err};
}

/// Unit-norm conjugate weights G_k^* / ||G_A|| on the active set, zero elsewhere.
template <typename Scalar>
VectorX<std::complex<Scalar>> beamform_weights(const ChannelSample<Scalar>& sample,
                                               std::span<const int> active) {
  detail::check_active(active, sample.size());
  Scalar norm2{0};
  for (int k : active) norm2 += sample.powers(k);
  require(norm2 > Scalar(0), ErrorKind::DegenerateChannel,
          "beamform_weights: active channel norm is zero");
  const Scalar norm = std::sqrt(norm2);
  VectorX<std::complex<Scalar>> w = VectorX<std::complex<Scalar>>::Zero(sample.size());
  for (int k : active) w(k) = std::conj(sample.gains(k)) / norm;
  return w;
}

}  // namespace recyc
