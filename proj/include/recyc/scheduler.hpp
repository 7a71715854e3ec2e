#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recyc/channel.hpp"
#include "recyc/error.hpp"

namespace recyc {

/// Sorted 0-based antenna indices.
using IndexSet = std::vector<int>;

struct SchedulerLimits {
  /// Cap on the number of simultaneously harvesting antennas.
  std::optional<int> max_harvesters;

  /// Largest admissible harvesting count for an m-antenna array.
  int harvest_budget(int m) const {
    if (!max_harvesters) return m - 1;
    require(*max_harvesters >= 0 && *max_harvesters < m, ErrorKind::InvalidParameter,
            "SchedulerLimits: max_harvesters must lie in [0, M)");
    return *max_harvesters;
  }
};

template <typename Scalar = double>
struct Schedule {
  IndexSet active;
  Scalar g{};
  Scalar f{};
};

inline constexpr int kExhaustiveMaxAntennas = 20;

/// Sets whose recycle fraction does not exceed this are infeasible. Leakage that
/// cancels the transmitted power exactly (e.g. ten harvesters at alpha = 0.1)
/// otherwise rounds to a tiny positive f and an unbounded gain.
inline constexpr double kMinRecycleFraction = 1e-9;

namespace detail {

inline void check_active(std::span<const int> active, Eigen::Index m) {
  require(!active.empty(), ErrorKind::InvalidParameter, "active set must be nonempty");
  for (std::size_t i = 0; i < active.size(); ++i) {
    require(active[i] >= 0 && active[i] < m, ErrorKind::InvalidParameter,
            "active index " + std::to_string(active[i]) + " out of range");
    require(i == 0 || active[i - 1] < active[i], ErrorKind::InvalidParameter,
            "active set must be sorted and free of duplicates");
  }
}

/// Returns (sum of active powers, leakage sum over active k and inactive l of h_k alpha_kl).
template <typename Derived, typename Scalar>
std::pair<Scalar, Scalar> active_sums(const Eigen::MatrixBase<Derived>& h,
                                      std::span<const int> active,
                                      const CouplingMatrix<Scalar>& coupling) {
  const auto m = h.size();
  require(coupling.size() == m, ErrorKind::InvalidParameter,
          "coupling size does not match channel size");
  check_active(active, m);
  std::vector<bool> is_active(static_cast<std::size_t>(m), false);
  for (int k : active) is_active[k] = true;

  Scalar sum{0};
  Scalar leak{0};
  for (int k : active) {
    sum += h(k);
    for (Eigen::Index l = 0; l < m; ++l)
      if (!is_active[l]) leak += h(k) * coupling(k, l);
  }
  require(sum > Scalar(0), ErrorKind::DegenerateChannel,
          "active antennas carry zero channel power");
  return {sum, leak};
}

}  // namespace detail

/// Fraction of allocated power actually consumed once recycled energy is credited:
/// f = 1 - (sum_{k in A} sum_{l not in A} h_k alpha_kl) / (sum_{k in A} h_k).
/// May be <= 0 for strong coupling; callers decide feasibility.
template <typename Derived, typename Scalar>
Scalar recycle_fraction(const Eigen::MatrixBase<Derived>& h, std::span<const int> active,
                        const CouplingMatrix<Scalar>& coupling) {
  const auto [sum, leak] = detail::active_sums(h, active, coupling);
  return Scalar(1) - leak / sum;
}

template <typename Scalar>
Scalar recycle_fraction(const ChannelSample<Scalar>& sample, std::span<const int> active,
                        const CouplingMatrix<Scalar>& coupling) {
  return recycle_fraction(sample.powers, active, coupling);
}

/// Channel gain per unit of consumed power, (sum h)^2 / (sum h - leakage).
/// Empty optional when the set is infeasible (f <= 0).
template <typename Derived, typename Scalar>
std::optional<Scalar> effective_gain(const Eigen::MatrixBase<Derived>& h,
                                     std::span<const int> active,
                                     const CouplingMatrix<Scalar>& coupling) {
  const auto [sum, leak] = detail::active_sums(h, active, coupling);
  const Scalar den = sum - leak;
  if (!(den > Scalar(kMinRecycleFraction) * sum)) return std::nullopt;
  return sum * sum / den;
}

template <typename Scalar>
std::optional<Scalar> effective_gain(const ChannelSample<Scalar>& sample,
                                     std::span<const int> active,
                                     const CouplingMatrix<Scalar>& coupling) {
  return effective_gain(sample.powers, active, coupling);
}

/// Maximizes g over every nonempty active set whose complement respects the
/// harvesting cap. Harvesting sets are enumerated depth-first with the leakage
/// updated incrementally, O(|B|) per visited set.
///
/// Ties go to the larger active set, then to the lexicographically smallest one.
template <typename Derived, typename Scalar>
Schedule<Scalar> schedule_exhaustive(const Eigen::MatrixBase<Derived>& h,
                                     const CouplingMatrix<Scalar>& coupling,
                                     const SchedulerLimits& limits = {},
                                     int max_antennas = kExhaustiveMaxAntennas) {
  const int m = static_cast<int>(h.size());
  require(m >= 1, ErrorKind::InvalidParameter, "schedule_exhaustive: empty channel");
  require(coupling.size() == m, ErrorKind::InvalidParameter,
          "schedule_exhaustive: coupling size does not match channel size");
  require(m <= max_antennas && m <= 62, ErrorKind::SizeLimitExceeded,
          "schedule_exhaustive: M = " + std::to_string(m) + " exceeds the limit of " +
              std::to_string(max_antennas));
  const int cap = limits.harvest_budget(m);

  const VectorX<Scalar> hv = h;
  const MatrixX<Scalar>& alpha = coupling.alpha();
  // column_load(j) = sum_k h_k alpha_kj: what antenna j would harvest from everyone.
  const VectorX<Scalar> column_load = alpha.transpose() * hv;
  const Scalar total = hv.sum();
  const std::uint64_t full = (1ULL << m) - 1;

  std::uint64_t best_mask = 0;  // harvesting set of the incumbent
  Scalar best_g{-1};
  Scalar best_f{1};

  auto consider = [&](std::uint64_t harvest, Scalar sum_harvest, Scalar leak) {
    const Scalar sum = total - sum_harvest;
    if (!(sum > Scalar(0))) return;
    const Scalar den = sum - leak;
    if (!(den > Scalar(kMinRecycleFraction) * sum)) return;
    const Scalar g = sum * sum / den;
    bool take = g > best_g;
    if (!take && g == best_g) {
      const int size_new = m - std::popcount(harvest);
      const int size_best = m - std::popcount(best_mask);
      if (size_new != size_best) {
        take = size_new > size_best;
      } else {
        const std::uint64_t a_new = full & ~harvest;
        const std::uint64_t a_best = full & ~best_mask;
        const std::uint64_t diff = a_new ^ a_best;
        take = diff != 0 && (a_new & (diff & (~diff + 1))) != 0;
      }
    }
    if (take) {
      best_g = g;
      best_f = den / sum;
      best_mask = harvest;
    }
  };

  std::vector<int> stack;
  stack.reserve(static_cast<std::size_t>(cap));
  auto visit = [&](auto&& self, int start, std::uint64_t harvest, Scalar sum_harvest,
                   Scalar leak) -> void {
    consider(harvest, sum_harvest, leak);
    if (static_cast<int>(stack.size()) == cap) return;
    for (int j = start; j < m; ++j) {
      Scalar from_harvesters{0};  // sum_{k in B} h_k alpha_kj
      Scalar to_harvesters{0};    // sum_{l in B} alpha_jl
      for (int b : stack) {
        from_harvesters += hv(b) * alpha(b, j);
        to_harvesters += alpha(j, b);
      }
      const Scalar next_leak =
          leak - hv(j) * to_harvesters + (column_load(j) - from_harvesters);
      stack.push_back(j);
      self(self, j + 1, harvest | (1ULL << j), sum_harvest + hv(j), next_leak);
      stack.pop_back();
    }
  };
  visit(visit, 0, 0, Scalar(0), Scalar(0));

  require(best_g > Scalar(0), ErrorKind::DegenerateChannel,
          "schedule_exhaustive: no feasible active set (all channel powers zero)");
  Schedule<Scalar> out;
  for (int k = 0; k < m; ++k)
    if (!(best_mask >> k & 1ULL)) out.active.push_back(k);
  out.g = best_g;
  out.f = best_f;
  return out;
}

template <typename Scalar>
Schedule<Scalar> schedule_exhaustive(const ChannelSample<Scalar>& sample,
                                     const CouplingMatrix<Scalar>& coupling,
                                     const SchedulerLimits& limits = {},
                                     int max_antennas = kExhaustiveMaxAntennas) {
  return schedule_exhaustive(sample.powers, coupling, limits, max_antennas);
}

/// g_i for the i strongest antennas under constant coupling:
/// (sum of the i largest powers) / (1 - (M - i) alpha). Empty when infeasible.
template <typename Derived, typename Scalar>
std::optional<Scalar> sorted_prefix_gain(int i, const Eigen::MatrixBase<Derived>& sorted_powers,
                                         Scalar alpha, int m) {
  require(sorted_powers.size() == m, ErrorKind::InvalidParameter,
          "sorted_prefix_gain: m does not match the power vector");
  require(i >= 1 && i <= m, ErrorKind::InvalidParameter,
          "sorted_prefix_gain: prefix length out of range");
#ifndef NDEBUG
  for (int k = 1; k < m; ++k)
    require(sorted_powers(k - 1) >= sorted_powers(k), ErrorKind::InvalidParameter,
            "sorted_prefix_gain: powers must be sorted in descending order");
#endif
  const Scalar den = Scalar(1) - Scalar(m - i) * alpha;
  if (!(den > Scalar(kMinRecycleFraction))) return std::nullopt;
  return sorted_powers.head(i).sum() / den;
}

/// Descending order of powers; ties resolved by ascending antenna index.
template <typename Derived>
std::vector<int> descending_order(const Eigen::MatrixBase<Derived>& h) {
  std::vector<int> order(static_cast<std::size_t>(h.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return h(a) > h(b); });
  return order;
}

/// Sorted-prefix scheduler for constant coupling. Walks i upward from the
/// smallest admissible prefix and stops at the first i with g_i >= g_{i+1};
/// unimodality of g_i makes that stop the global maximum.
template <typename Derived, typename Scalar>
Schedule<Scalar> schedule_fast(const Eigen::MatrixBase<Derived>& h, Scalar alpha,
                               const SchedulerLimits& limits = {}) {
  const int m = static_cast<int>(h.size());
  require(m >= 1, ErrorKind::InvalidParameter, "schedule_fast: empty channel");
  require(alpha >= Scalar(0) && alpha < Scalar(1), ErrorKind::InvalidParameter,
          "schedule_fast: alpha must lie in [0, 1)");
  const int cap = limits.harvest_budget(m);

  const std::vector<int> order = descending_order(h);
  VectorX<Scalar> prefix(m);
  Scalar running{0};
  for (int k = 0; k < m; ++k) prefix(k) = running += h(order[k]);

  auto denominator = [&](int i) { return Scalar(1) - Scalar(m - i) * alpha; };
  int i = std::max(1, m - cap);
  while (i < m && !(denominator(i) > Scalar(kMinRecycleFraction))) ++i;
  auto gain = [&](int n) { return prefix(n - 1) / denominator(n); };
  while (i < m && gain(i) < gain(i + 1)) ++i;

  require(prefix(i - 1) > Scalar(0), ErrorKind::DegenerateChannel,
          "schedule_fast: selected antennas carry zero channel power");
  Schedule<Scalar> out;
  out.active.assign(order.begin(), order.begin() + i);
  std::sort(out.active.begin(), out.active.end());
  out.g = gain(i);
  out.f = denominator(i);
  return out;
}

template <typename Scalar>
Schedule<Scalar> schedule_fast(const ChannelSample<Scalar>& sample, Scalar alpha,
                               const SchedulerLimits& limits = {}) {
  return schedule_fast(sample.powers, alpha, limits);
}

/// Unimodality check over the full prefix scan: once g_i >= g_{i+1}, no later
/// g_j exceeds g_i. Used by the property tests.
template <typename Derived, typename Scalar>
bool check_lemma1(const Eigen::MatrixBase<Derived>& sorted_powers, Scalar alpha, int m) {
  if (m <= 1) return true;
  // Infeasible prefixes (1 - (M - i) alpha <= 0) form a leading run; skip it.
  std::vector<Scalar> g(static_cast<std::size_t>(m) + 1);
  int first = m;
  for (int i = m; i >= 1; --i) {
    const auto gi = sorted_prefix_gain(i, sorted_powers, alpha, m);
    if (!gi) break;
    g[i] = *gi;
    first = i;
  }
  for (int i = first; i < m; ++i) {
    if (g[i] >= g[i + 1]) {
      for (int j = i; j <= m; ++j)
        if (g[j] > g[i]) return false;
      return true;
    }
  }
  return true;
}

}  // namespace recyc
