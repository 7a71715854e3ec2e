// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "recyc/cli.hpp"
#include "recyc/experiments.hpp"
#include "recyc/power.hpp"
#include "recyc/scheduler.hpp"
#include "recyc/units.hpp"

using namespace recyc;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig fig2_config(double snr_db) {
  ExperimentConfig c;
  c.m = 25;
  c.max_harvesters = 5;
  c.coupling = ScalarCoupling{db_to_linear(-15.0)};
  c.snr_db = snr_db;
  c.n_samples = 100000;
  c.seed = 1;
  c.scheduler = SchedulerKind::Fast;
  return c;
}

// Rows collected from every sweep run here, for the ordering criterion.
std::vector<SweepRow> all_rows;

void collect(const SweepResult& r) { all_rows.insert(all_rows.end(), r.rows.begin(), r.rows.end()); }

}  // namespace

int main() {
  criterion(1, "fast scheduler matches exhaustive search", [] {
    const double alphas[] = {0.01, 0.0316, 0.1, 0.3};
    long draws = 0, mismatches = 0;
    double worst = 0.0;
    for (double alpha : alphas) {
      for (int m = 2; m <= 12; ++m) {
        const auto coupling = CouplingMatrix<double>::symmetric(m, alpha);
        for (int n = 0; n < 10000; ++n) {
          SampleStream stream(2024, static_cast<std::uint64_t>(m * 100000 + n),
                              static_cast<std::uint32_t>(alpha * 1e4));
          const auto s = draw_channel(stream, m, 1.0);
          const auto fast = schedule_fast(s, alpha);
          const auto exact = schedule_exhaustive(s, coupling);
          const double rel = std::abs(fast.g - exact.g) / std::abs(exact.g);
          worst = std::max(worst, rel);
          if (!(rel <= 1e-12)) ++mismatches;
          ++draws;
        }
      }
    }
    return Outcome{mismatches == 0,
                   fmt("%ld draws, %ld mismatches, worst relative gap %.3g", draws, mismatches, worst)};
  });

  criterion(2, "prefix gain unimodality", [] {
    long draws = 0, violations = 0;
    for (double alpha : {0.01, 0.1, 0.3}) {
      for (int m : {4, 8, 16}) {
        for (int n = 0; n < 10000; ++n) {
          SampleStream stream(77, static_cast<std::uint64_t>(m * 100000 + n),
                              static_cast<std::uint32_t>(alpha * 1e3));
          VectorX<double> h = draw_channel(stream, m, 1.0).powers;
          std::sort(h.begin(), h.end(), std::greater<>());
          if (!check_lemma1(h, alpha, m)) ++violations;
          ++draws;
        }
      }
    }
    return Outcome{violations == 0, fmt("%ld draws, %ld violations", draws, violations)};
  });

  criterion(3, "water-filling level and budget", [] {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> size(1, 1000);
    std::exponential_distribution<double> gain(1.0);
    std::uniform_real_distribution<double> log_budget(-4.0, 2.0);
    double worst_level = 0.0, worst_budget = 0.0;
    for (int t = 0; t < 100; ++t) {
      const int n = size(rng);
      std::vector<double> g(n);
      for (auto& x : g) x = gain(rng) + 1e-6;
      const double budget = std::pow(10.0, log_budget(rng));
      const GainSamples<double> samples(Eigen::Map<VectorX<double>>(g.data(), n),
                                        PowerMode::Recycling);
      const auto policy = solve_water_level(samples, budget);
      const double want = oracle::water_level(g, budget);
      worst_level = std::max(worst_level, std::abs(policy.water_level - want) / want);
      worst_budget = std::max(
          worst_budget, std::abs(mean_allocated_power(samples, policy.water_level) - budget) / budget);
    }
    // Full Monte Carlo points: consumed power against the budget.
    for (double snr : {10.0, 0.0, -10.0}) {
      auto c = fig2_config(snr);
      c.n_samples = 20000;
      const auto p = run_point(c);
      worst_budget = std::max(worst_budget, std::abs(p.consumed_power_ryc - p.budget) / p.budget);
    }
    return Outcome{worst_level <= 1e-9 && worst_budget <= 1e-6,
                   fmt("worst level gap %.3g (limit 1e-9), worst budget error %.3g (limit 1e-6)",
                       worst_level, worst_budget)};
  });

  criterion(5, "harvested power audit", [] {
    ExperimentConfig c;
    c.m = 4;
    c.coupling = ScalarCoupling{db_to_linear(-15.0)};
    c.snr_db = 10.0;
    c.n_samples = 1000000;
    c.seed = 5;
    const auto a = verify_harvest_identity(c);
    const double diff = a.simulated_harvest - a.analytic_harvest;
    const double rel = std::abs(diff) / a.analytic_harvest;
    const bool ok = std::abs(diff) <= 3.0 * a.diff_std_err && rel <= 0.01 &&
                    std::abs(a.cross_term) <= 5.0 * a.cross_std_err;
    return Outcome{ok, fmt("diff %.3g = %.2f SE, relative %.3g%%, cross term %.3g = %.2f SE",
                           diff, std::abs(diff) / a.diff_std_err, 100.0 * rel, a.cross_term,
                           std::abs(a.cross_term) / a.cross_std_err)};
  });

  criterion(6, "rate gains 7/10/20 % at 10/0/-10 dB", [] {
    const double snrs[] = {10.0, 0.0, -10.0};
    const double targets[] = {7.0, 10.0, 20.0};
    double gains[3];
    bool within = true;
    for (int i = 0; i < 3; ++i) {
      const auto p = run_point(fig2_config(snrs[i]));
      gains[i] = gain_percent(p.rate_ryc, p.rate_noryc);
      within = within && std::abs(gains[i] - targets[i]) <= 2.0;
      collect({{SweepRow{snrs[i], p.rate_ryc, p.rate_noryc, p.std_err_ryc, p.std_err_noryc,
                         p.avg_active, gains[i]}}});
    }
    const bool ordered = gains[2] > gains[1] && gains[1] > gains[0];
    return Outcome{within && ordered,
                   fmt("gains %.2f / %.2f / %.2f %%, ordering %s", gains[0], gains[1], gains[2],
                       ordered ? "holds" : "violated")};
  });

  criterion(7, "average harvesting count below 6 with cap 10", [] {
    auto c = fig2_config(10.0);
    c.max_harvesters = 10;
    std::vector<int> ms;
    for (int m = 5; m <= 25; ++m) ms.push_back(m);
    const auto rows = avg_active_sweep(c, ms);
    double worst = 0.0;
    int worst_m = 0, over = 0;
    for (const auto& r : rows) {
      if (r.avg_harvesting >= 6.0) ++over;
      if (r.avg_harvesting > worst) {
        worst = r.avg_harvesting;
        worst_m = r.m;
      }
    }
    return Outcome{over == 0, fmt("%d of %zu counts >= 6, largest %.2f at M=%d", over, rows.size(),
                                  worst, worst_m)};
  });

  criterion(8, "rate plateau for caps above 6", [] {
    const auto r = sweep_harvest_cap(fig2_config(10.0), {6, 7, 8, 9, 10});
    collect(r);
    const double base = r.rows.front().rate_ryc;
    std::string detail;
    bool ok = true;
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      const auto& row = r.rows[i];
      const double excess = (row.rate_ryc - base) / row.std_err_ryc;
      ok = ok && row.rate_ryc - base < 2.0 * row.std_err_ryc;
      detail += fmt("%scap %g: +%.2f SE", i == 1 ? "" : ", ", row.x, excess);
    }
    return Outcome{ok, detail};
  });

  criterion(9, "hexagonal array antenna penalty at m=20", [] {
    ExperimentConfig c;
    c.m = 20;
    c.max_harvesters = 6;
    c.coupling = GeometryCoupling{LayoutKind::Hex, 1.0 / 3.0, -10.3, std::nullopt, 2.0};
    c.snr_db = 10.0;
    c.n_samples = 100000;
    c.seed = 9;
    c.scheduler = SchedulerKind::Exhaustive;
    std::vector<int> ms;
    for (int m = 2; m <= 20; ++m) ms.push_back(m);
    const auto r = sweep_m(c, ms);
    collect(r);
    const int penalty = antenna_penalty(r, 20);
    return Outcome{penalty >= 3, fmt("penalty %d (need >= 3)", penalty)};
  });

  criterion(4, "recycling rate never below classical rate", [] {
    for (double alpha_db : {-25.0, -15.0, -10.0, -5.0}) {
      ExperimentConfig c;
      c.m = 25;
      c.coupling = ScalarCoupling{db_to_linear(alpha_db)};
      c.snr_db = 0.0;
      c.n_samples = 5000;
      c.seed = 4;
      std::vector<int> ms;
      for (int m = 1; m <= 25; ++m) ms.push_back(m);
      collect(sweep_m(c, ms));
    }
    long violations = 0;
    for (const auto& row : all_rows)
      if (row.rate_ryc < row.rate_noryc) ++violations;
    return Outcome{violations == 0,
                   fmt("%zu rows, %ld violations", all_rows.size(), violations)};
  });

  criterion(10, "byte-identical CSV across runs and worker counts", [] {
    auto run = [](const char* threads, std::vector<std::string> args) {
      setenv("RECYC_MISO_THREADS", threads, 1);
      std::ostringstream out, err;
      const int code = cli::parse_and_dispatch(args, out, err);
      unsetenv("RECYC_MISO_THREADS");
      return code == 0 ? out.str() : "exit " + std::to_string(code) + ": " + err.str();
    };
    const std::vector<std::vector<std::string>> sweeps{
        {"rate-sweep", "--m", "5..25:5", "--cap", "5", "--alpha-db", "-15", "--n-samples", "20000",
         "--seed", "10"},
        {"cap-sweep", "--m", "25", "--caps", "0..10", "--alpha-db", "-15", "--n-samples", "20000",
         "--seed", "10"},
        {"active-sweep", "--m", "5..25:10", "--cap", "10", "--alpha-db", "-15", "--n-samples",
         "20000", "--seed", "10"},
        {"penalty", "--m", "2..8", "--layout", "hex", "--scheduler", "exhaustive", "--cap", "6",
         "--n-samples", "5000", "--seed", "10"},
        {"audit", "--m", "4", "--alpha-db", "-15", "--n-samples", "50000", "--seed", "10"}};
    int identical = 0;
    for (const auto& args : sweeps) {
      const auto a = run("1", args), b = run("1", args), c = run("8", args);
      if (a == b && a == c && a.rfind("# config: ", 0) == 0) ++identical;
    }
    return Outcome{identical == static_cast<int>(sweeps.size()),
                   fmt("%d of %zu sweeps identical", identical, sweeps.size())};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
