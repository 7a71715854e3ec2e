#include "recyc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "recyc/csv.hpp"
#include "recyc/units.hpp"

namespace recyc::cli {

namespace {

int parse_int(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected an integer, got '" + text + "'");
}

double parse_double(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a number, got '" + text + "'");
}

double alpha_from_db(double db, const std::string& key) {
  if (!(db < 0.0)) throw ConfigError(key, "coupling must be below 0 dB (alpha >= 1 is invalid)");
  return db_to_linear(db);
}

double alpha_from_linear(double a, const std::string& key) {
  if (!(a >= 0.0 && a < 1.0)) throw ConfigError(key, "coupling must lie in [0, 1)");
  return a;
}

SchedulerKind parse_scheduler(const std::string& text) {
  if (text == "fast") return SchedulerKind::Fast;
  if (text == "exhaustive") return SchedulerKind::Exhaustive;
  throw ConfigError("scheduler", "expected 'fast' or 'exhaustive', got '" + text + "'");
}

LayoutKind parse_layout(const std::string& text) {
  if (text == "hex") return LayoutKind::Hex;
  if (text == "ula") return LayoutKind::Ula;
  throw ConfigError("layout", "expected 'hex' or 'ula', got '" + text + "'");
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(key, "malformed value");
  }
}

GeometryCoupling& geometry_of(ExperimentConfig& config) {
  if (!std::holds_alternative<GeometryCoupling>(config.coupling))
    config.coupling = GeometryCoupling{};
  return std::get<GeometryCoupling>(config.coupling);
}

MatrixCoupling matrix_coupling(const std::string& path) {
  try {
    return {path, load_coupling_table(path)};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("coupling_file", e.what());
  }
}

void apply_coupling_section(ExperimentConfig& config, const YAML::Node& section,
                            const std::string& base_dir) {
  if (!section.IsMap()) throw ConfigError("coupling", "expected a mapping");
  std::string kind = "scalar";
  if (section["kind"]) kind = scalar_as<std::string>(section["kind"], "coupling.kind");
  for (const auto& item : section) {
    const auto key = item.first.as<std::string>();
    const auto& value = item.second;
    if (key == "kind") continue;
    if (kind == "scalar" && key == "alpha_db") {
      config.coupling = ScalarCoupling{alpha_from_db(scalar_as<double>(value, key), key)};
    } else if (kind == "scalar" && key == "alpha") {
      config.coupling = ScalarCoupling{alpha_from_linear(scalar_as<double>(value, key), key)};
    } else if (kind == "matrix" && key == "path") {
      std::filesystem::path p = scalar_as<std::string>(value, key);
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      config.coupling = matrix_coupling(p.string());
    } else if (kind == "geometry" && key == "layout") {
      geometry_of(config).layout = parse_layout(scalar_as<std::string>(value, key));
    } else if (kind == "geometry" && key == "spacing") {
      geometry_of(config).spacing = scalar_as<double>(value, key);
    } else if (kind == "geometry" && key == "alpha_ref_db") {
      geometry_of(config).alpha_ref_db = scalar_as<double>(value, key);
    } else if (kind == "geometry" && key == "d_ref") {
      geometry_of(config).d_ref = scalar_as<double>(value, key);
    } else if (kind == "geometry" && key == "exponent") {
      geometry_of(config).exponent = scalar_as<double>(value, key);
    } else {
      throw ConfigError("coupling." + key, "unknown key for coupling kind '" + kind + "'");
    }
  }
  if (kind == "geometry") geometry_of(config);
  if (kind != "scalar" && kind != "matrix" && kind != "geometry")
    throw ConfigError("coupling.kind", "expected scalar, matrix or geometry");
  if (kind == "matrix" && !std::holds_alternative<MatrixCoupling>(config.coupling))
    throw ConfigError("coupling.path", "matrix coupling needs a path");
}

/// Flag values; each one overrides the corresponding config-file key.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> output;
  bool dry_run = false;
  std::optional<std::string> m;
  std::optional<int> cap;
  std::optional<double> snr_db;
  std::optional<int> snr_reference_m;
  std::optional<double> alpha_db;
  std::optional<double> alpha;
  std::optional<double> mean_gain_db;
  std::optional<std::int64_t> n_samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheduler;
  std::optional<std::string> coupling_file;
  std::optional<std::string> layout;
  std::optional<double> spacing;
  std::optional<double> alpha_ref_db;
  std::optional<double> d_ref;
  std::optional<double> exponent;
  bool deterministic_s = false;
  // subcommand-specific
  std::optional<std::string> caps;
  std::optional<std::string> h;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "YAML experiment file");
  sub->add_option("-o,--output", o.output, "CSV output path (default: stdout)");
  sub->add_flag("--dry-run", o.dry_run, "Validate and print the resolved config only");
  sub->add_option("--m", o.m, "Antenna count, or a range a..b[:step] for sweeps");
  sub->add_option("--cap", o.cap, "Maximum number of harvesting antennas");
  sub->add_option("--snr-db", o.snr_db, "Nominal received SNR in dB");
  sub->add_option("--snr-reference-m", o.snr_reference_m,
                  "Antenna count at which --snr-db sets the budget (sweeps: largest m)");
  sub->add_option("--alpha-db", o.alpha_db, "Constant coupling in dB");
  sub->add_option("--alpha", o.alpha, "Constant coupling as a linear ratio");
  sub->add_option("--mean-gain-db", o.mean_gain_db, "Mean channel power gain in dB");
  sub->add_option("--n-samples", o.n_samples, "Monte Carlo draws per point");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--scheduler", o.scheduler, "fast | exhaustive");
  sub->add_option("--coupling-file", o.coupling_file, "Coupling table file");
  sub->add_option("--layout", o.layout, "Antenna geometry: hex | ula");
  sub->add_option("--spacing", o.spacing, "Geometry spacing in wavelengths");
  sub->add_option("--alpha-ref-db", o.alpha_ref_db, "Coupling at the reference distance (dB)");
  sub->add_option("--d-ref", o.d_ref, "Reference distance in wavelengths");
  sub->add_option("--exponent", o.exponent, "Coupling decay exponent");
}

ExperimentConfig resolve(const Overrides& o, bool m_is_range) {
  ExperimentConfig config;
  if (o.config_path) config = load_config(*o.config_path);
  if (o.m && !m_is_range) config.m = parse_int(*o.m, "m");
  if (o.cap) config.max_harvesters = *o.cap;
  if (o.snr_db) config.snr_db = *o.snr_db;
  if (o.snr_reference_m) config.snr_reference_m = *o.snr_reference_m;
  if (o.mean_gain_db) config.mean_gain_db = *o.mean_gain_db;
  if (o.n_samples) config.n_samples = *o.n_samples;
  if (o.seed) config.seed = *o.seed;
  if (o.scheduler) config.scheduler = parse_scheduler(*o.scheduler);
  if (o.alpha_db) config.coupling = ScalarCoupling{alpha_from_db(*o.alpha_db, "alpha_db")};
  if (o.alpha) config.coupling = ScalarCoupling{alpha_from_linear(*o.alpha, "alpha")};
  if (o.coupling_file) config.coupling = matrix_coupling(*o.coupling_file);
  if (o.layout) geometry_of(config).layout = parse_layout(*o.layout);
  if (o.spacing) geometry_of(config).spacing = *o.spacing;
  if (o.alpha_ref_db) geometry_of(config).alpha_ref_db = *o.alpha_ref_db;
  if (o.d_ref) geometry_of(config).d_ref = *o.d_ref;
  if (o.exponent) geometry_of(config).exponent = *o.exponent;
  if (o.deterministic_s) config.deterministic_symbol_power = true;
  return config;
}

std::vector<int> m_values(const Overrides& o, const ExperimentConfig& config) {
  return o.m ? parse_range(*o.m, "m") : std::vector<int>{config.m};
}

std::string header_line(const ExperimentConfig& config,
                        std::map<std::string, std::string> extra) {
  auto pairs = config.canonical_pairs();
  pairs.merge(extra);
  return join_pairs(pairs);
}

std::string format_set(const IndexSet& active) {
  std::string s;
  for (int k : active) s += (s.empty() ? "" : " ") + std::to_string(k + 1);
  return s;
}

std::vector<std::string> sweep_row(const SweepRow& r) {
  return {format_number(r.x),          format_number(r.rate_ryc),      format_number(r.rate_noryc),
          format_number(r.std_err_ryc), format_number(r.std_err_noryc), format_number(r.avg_active),
          format_number(r.gain_pct)};
}

void validate_sweep_config(ExperimentConfig config, const std::vector<int>& ms) {
  for (int m : ms) {
    config.m = m;
    config.validate();
  }
}

}  // namespace

std::vector<int> parse_range(const std::string& text, const std::string& key) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = parse_int(text.substr(0, dots), key);
    std::string rest = text.substr(dots + 2);
    int step = 1;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = parse_int(rest.substr(colon + 1), key);
      rest = rest.substr(0, colon);
    }
    const int hi = parse_int(rest, key);
    if (step < 1) throw ConfigError(key, "range step must be >= 1");
    if (hi < lo) throw ConfigError(key, "empty range '" + text + "'");
    for (int v = lo; v <= hi; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(item, key));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

MatrixX<double> load_coupling_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("coupling_file", "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::stringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) row.push_back(parse_double(tok, "coupling_file"));
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (m == 0) throw ConfigError("coupling_file", "table is empty");
  MatrixX<double> alpha(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    if (static_cast<Eigen::Index>(rows[k].size()) != m)
      throw ConfigError("coupling_file", "table must be square");
    for (Eigen::Index l = 0; l < m; ++l) alpha(k, l) = rows[k][l];
  }
  return alpha;
}

ExperimentConfig parse_config_yaml(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", std::string("malformed YAML: ") + e.what());
  }
  ExperimentConfig config;
  if (root.IsNull()) return config;
  if (!root.IsMap()) throw ConfigError("config", "top level must be a mapping");
  for (const auto& item : root) {
    const auto key = item.first.as<std::string>();
    const auto& value = item.second;
    if (key == "m") {
      config.m = scalar_as<int>(value, key);
    } else if (key == "max_harvesters" || key == "cap") {
      config.max_harvesters = scalar_as<int>(value, key);
    } else if (key == "mean_gain_db") {
      config.mean_gain_db = scalar_as<double>(value, key);
    } else if (key == "snr_db") {
      config.snr_db = scalar_as<double>(value, key);
    } else if (key == "snr_reference_m") {
      config.snr_reference_m = scalar_as<int>(value, key);
    } else if (key == "n_samples") {
      config.n_samples = scalar_as<std::int64_t>(value, key);
    } else if (key == "seed") {
      config.seed = scalar_as<std::uint64_t>(value, key);
    } else if (key == "scheduler") {
      config.scheduler = parse_scheduler(scalar_as<std::string>(value, key));
    } else if (key == "deterministic_symbol_power") {
      config.deterministic_symbol_power = scalar_as<bool>(value, key);
    } else if (key == "alpha_db") {
      config.coupling = ScalarCoupling{alpha_from_db(scalar_as<double>(value, key), key)};
    } else if (key == "alpha") {
      config.coupling = ScalarCoupling{alpha_from_linear(scalar_as<double>(value, key), key)};
    } else if (key == "coupling") {
      apply_coupling_section(config, value, base_dir);
    } else {
      throw ConfigError(key, "unknown config key");
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_yaml(ss.str(), std::filesystem::path(path).parent_path().string());
}

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"Energy-recycling MISO rate simulator"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  Overrides o;

  auto* rate = app.add_subcommand("rate-sweep", "Rates with and without recycling versus M");
  auto* cap = app.add_subcommand("cap-sweep", "Recycling rate versus the harvesting cap");
  auto* active = app.add_subcommand("active-sweep", "Average active/harvesting antennas versus M");
  auto* penalty = app.add_subcommand("penalty", "Antenna penalty of the classical system");
  auto* audit = app.add_subcommand("audit", "Monte Carlo check of the harvested-power identity");
  auto* once = app.add_subcommand("schedule-once", "Schedule one explicit channel");
  auto* check = app.add_subcommand("validate-config", "Validate and print a config");
  for (auto* sub : {rate, cap, active, penalty, audit, once, check}) add_common(sub, o);
  cap->add_option("--caps", o.caps, "Cap values a..b[:step] (default 0..10)");
  audit->add_flag("--deterministic-s", o.deterministic_s, "Use |S|^2 = P(h) in the audit");
  once->add_option("--h", o.h, "Comma-separated channel power gains")->required();

  std::vector<const char*> argv{"recyc_miso"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const bool sweeps_m = rate->parsed() || active->parsed() || penalty->parsed();
    CsvDocument doc;
    std::map<std::string, std::string> extra;

    if (once->parsed()) {
      std::vector<double> h;
      std::stringstream ss(*o.h);
      std::string tok;
      while (std::getline(ss, tok, ',')) h.push_back(parse_double(tok, "h"));
      if (h.empty()) throw ConfigError("h", "empty channel vector");
      for (double v : h)
        if (!(v >= 0.0)) throw ConfigError("h", "power gains must be nonnegative");
      ExperimentConfig config = resolve(o, false);
      config.m = static_cast<int>(h.size());
      SchedulerLimits limits;
      if (config.max_harvesters) {
        if (*config.max_harvesters >= config.m)
          throw ConfigError("max_harvesters", "must be below the antenna count");
        limits.max_harvesters = config.max_harvesters;
      }
      const auto coupling = config.resolve_coupling();
      extra = {{"command", "schedule-once"}, {"h", *o.h}};
      doc.config = header_line(config, extra);
      if (o.dry_run) {
        out << "# config: " << doc.config << '\n';
        return 0;
      }
      const VectorX<double> powers = Eigen::Map<const VectorX<double>>(h.data(), h.size());
      doc.header = {"scheduler", "active", "f", "g"};
      if (const auto a = coupling.symmetric_scalar()) {
        const auto s = schedule_fast(powers, *a, limits);
        doc.rows.push_back({"fast", format_set(s.active), format_number(s.f), format_number(s.g)});
      }
      if (config.m <= kExhaustiveMaxAntennas) {
        const auto s = schedule_exhaustive(powers, coupling, limits);
        doc.rows.push_back(
            {"exhaustive", format_set(s.active), format_number(s.f), format_number(s.g)});
      }
    } else {
      ExperimentConfig config = resolve(o, sweeps_m);
      std::vector<int> ms = sweeps_m ? m_values(o, config) : std::vector<int>{config.m};
      std::vector<int> caps;
      if (cap->parsed()) caps = parse_range(o.caps.value_or("0..10"), "caps");

      if (sweeps_m) {
        validate_sweep_config(config, ms);
        extra["sweep_m"] = o.m.value_or(std::to_string(config.m));
        config.m = *std::max_element(ms.begin(), ms.end());
        if (!config.snr_reference_m && (rate->parsed() || penalty->parsed()))
          config.snr_reference_m = config.m;
      } else {
        config.validate();
      }
      if (cap->parsed()) extra["sweep_cap"] = o.caps.value_or("0..10");

      const char* command = rate->parsed()      ? "rate-sweep"
                            : cap->parsed()     ? "cap-sweep"
                            : active->parsed()  ? "active-sweep"
                            : penalty->parsed() ? "penalty"
                            : audit->parsed()   ? "audit"
                                                : "validate-config";
      extra["command"] = command;
      doc.config = header_line(config, extra);
      if (o.dry_run || check->parsed()) {
        out << "# config: " << doc.config << '\n';
        return 0;
      }

      if (rate->parsed()) {
        doc.header = {"m", "rate_ryc_bits", "rate_noryc_bits", "stderr_ryc",
                      "stderr_noryc", "avg_active", "gain_pct"};
        for (const auto& r : sweep_m(config, ms).rows) doc.rows.push_back(sweep_row(r));
      } else if (cap->parsed()) {
        doc.header = {"cap", "rate_ryc_bits", "rate_noryc_bits", "stderr_ryc",
                      "stderr_noryc", "avg_active", "gain_pct"};
        for (const auto& r : sweep_harvest_cap(config, caps).rows) doc.rows.push_back(sweep_row(r));
      } else if (active->parsed()) {
        doc.header = {"m", "avg_active", "avg_harvesting"};
        for (const auto& r : avg_active_sweep(config, ms))
          doc.rows.push_back({std::to_string(r.m), format_number(r.avg_active),
                              format_number(r.avg_harvesting)});
      } else if (penalty->parsed()) {
        const auto result = sweep_m(config, ms);
        doc.header = {"m", "rate_ryc_bits", "rate_noryc_bits", "penalty"};
        for (const auto& r : result.rows) {
          const int m = static_cast<int>(r.x);
          doc.rows.push_back({std::to_string(m), format_number(r.rate_ryc),
                              format_number(r.rate_noryc),
                              std::to_string(antenna_penalty(result, m))});
        }
      } else if (audit->parsed()) {
        const auto a = verify_harvest_identity(config);
        const double rel = a.analytic_harvest > 0.0
                               ? (a.simulated_harvest - a.analytic_harvest) / a.analytic_harvest
                               : 0.0;
        doc.header = {"analytic_harvest", "simulated_harvest", "stderr_diff", "cross_term",
                      "stderr_cross", "noise_harvest", "relative_error"};
        doc.rows.push_back({format_number(a.analytic_harvest), format_number(a.simulated_harvest),
                            format_number(a.diff_std_err), format_number(a.cross_term),
                            format_number(a.cross_std_err), format_number(a.noise_harvest),
                            format_number(rel)});
      }
    }

    std::ostringstream buffer;
    write_csv(buffer, doc);
    if (o.output) {
      std::ofstream file(*o.output, std::ios::binary);
      if (!file) throw Error(ErrorKind::Io, "cannot write '" + *o.output + "'");
      file << buffer.str();
      if (!file) throw Error(ErrorKind::Io, "failed writing '" + *o.output + "'");
    } else {
      out << buffer.str();
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace recyc::cli
