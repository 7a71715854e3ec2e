#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "recyc/cli.hpp"
#include "recyc/csv.hpp"

using namespace recyc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::parse_and_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "recyc_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("rate-sweep CSV schema") {
  const auto r = run({"rate-sweep", "--m", "5..9:2", "--snr-db", "10", "--alpha-db", "-15",
                      "--cap", "5", "--seed", "7", "--n-samples", "2000"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const auto doc = read_csv(in);
  CHECK(doc.header == std::vector<std::string>{"m", "rate_ryc_bits", "rate_noryc_bits",
                                               "stderr_ryc", "stderr_noryc", "avg_active",
                                               "gain_pct"});
  REQUIRE(doc.rows.size() == 3);
  CHECK(doc.rows[0][0] == "5");
  CHECK(doc.rows[2][0] == "9");
  CHECK(doc.config.find("seed=7") != std::string::npos);
  CHECK(doc.config.find("command=rate-sweep") != std::string::npos);
  CHECK(r.out.rfind("# config: ", 0) == 0);
}

TEST_CASE("schedule-once reports both schedulers") {
  const auto r = run({"schedule-once", "--h", "1.0,0.5,0.01", "--alpha", "0.2"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const auto doc = read_csv(in);
  CHECK(doc.header == std::vector<std::string>{"scheduler", "active", "f", "g"});
  REQUIRE(doc.rows.size() == 2);
  CHECK(doc.rows[0][0] == "fast");
  CHECK(doc.rows[1][0] == "exhaustive");
  for (const auto& row : doc.rows) {
    CHECK(row[1] == "1 2");
    CHECK(std::stod(row[3]) == doctest::Approx(1.875).epsilon(1e-11));
    CHECK(std::stod(row[2]) == doctest::Approx(0.8).epsilon(1e-11));
  }
}

TEST_CASE("validate-config rejects alpha_db >= 0 dB") {
  const auto path = write_file("bad.yaml", "m: 4\nalpha_db: 3\n");
  const auto r = run({"validate-config", "--config", path});
  CHECK(r.code == 2);
  CHECK(r.err.find("alpha_db") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  const auto nested = write_file("bad_nested.yaml", "coupling:\n  kind: scalar\n  alpha_db: 3\n");
  const auto n = run({"validate-config", "--config", nested});
  CHECK(n.code == 2);
  CHECK(n.err.find("alpha_db") != std::string::npos);

  const auto flag = run({"validate-config", "--alpha-db", "3"});
  CHECK(flag.code == 2);
  CHECK(flag.err.find("alpha_db") != std::string::npos);
}

TEST_CASE("config errors name the key") {
  const auto unknown = write_file("unknown.yaml", "m: 4\nantennas: 3\n");
  auto r = run({"validate-config", "--config", unknown});
  CHECK(r.code == 2);
  CHECK(r.err.find("antennas") != std::string::npos);

  const auto malformed = write_file("malformed.yaml", "m: four\n");
  r = run({"validate-config", "--config", malformed});
  CHECK(r.code == 2);
  CHECK(r.err.find("m:") != std::string::npos);

  r = run({"validate-config", "--config", (scratch() / "missing.yaml").string()});
  CHECK(r.code == 2);

  r = run({"rate-sweep", "--bogus-flag", "1"});
  CHECK(r.code == 2);

  r = run({"rate-sweep", "--m", "9..3"});
  CHECK(r.code == 2);
  CHECK(r.err.find("m:") != std::string::npos);

  r = run({"rate-sweep", "--layout", "hex", "--m", "4"});
  CHECK(r.code == 2);
  CHECK(r.err.find("scheduler") != std::string::npos);
}

TEST_CASE("flag overrides take precedence over the config file") {
  const auto path = write_file("base.yaml",
                               "m: 6\nsnr_db: 0\nseed: 3\nn_samples: 500\n"
                               "coupling:\n  kind: scalar\n  alpha_db: -20\n");
  auto r = run({"validate-config", "--config", path});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("seed=3") != std::string::npos);
  CHECK(r.out.find("snr_db=0") != std::string::npos);
  CHECK(r.out.find("alpha=0.01 ") != std::string::npos);

  r = run({"validate-config", "--config", path, "--seed", "11", "--alpha-db", "-10"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("seed=11") != std::string::npos);
  CHECK(r.out.find("alpha=0.1 ") != std::string::npos);
  CHECK(r.out.find("m=6") != std::string::npos);
}

TEST_CASE("geometry and matrix coupling from a config file") {
  const auto table = write_file("table.txt", "0 0.1 0.05\n0.1 0 0.1\n0.05 0.1 0\n");
  const auto path = write_file("matrix.yaml",
                               "m: 3\nscheduler: exhaustive\nn_samples: 200\n"
                               "coupling:\n  kind: matrix\n  path: table.txt\n");
  auto r = run({"rate-sweep", "--config", path, "--m", "2..3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("coupling=matrix") != std::string::npos);
  (void)table;

  const auto geo = write_file("geo.yaml",
                              "m: 7\nscheduler: exhaustive\nmax_harvesters: 2\nn_samples: 200\n"
                              "coupling:\n  kind: geometry\n  layout: hex\n  spacing: 0.3333333333333333\n"
                              "  alpha_ref_db: -10.3\n  exponent: 2\n");
  r = run({"penalty", "--config", geo, "--m", "3..7"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const auto doc = read_csv(in);
  CHECK(doc.header == std::vector<std::string>{"m", "rate_ryc_bits", "rate_noryc_bits", "penalty"});
  CHECK(doc.rows.size() == 5);
}

TEST_CASE("dry-run prints the resolved config without computing") {
  for (const char* sub : {"rate-sweep", "cap-sweep", "active-sweep", "penalty", "audit"}) {
    const auto r = run({sub, "--dry-run", "--n-samples", "1000000000", "--m", "12"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("# config: ", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  }
  const auto once = run({"schedule-once", "--dry-run", "--h", "1,2", "--alpha", "0.1"});
  CHECK(once.code == 0);
}

TEST_CASE("output files are byte-identical across runs and worker counts") {
  const auto a = (scratch() / "a.csv").string();
  const auto b = (scratch() / "b.csv").string();
  const std::vector<std::string> args{"cap-sweep", "--m", "8", "--caps", "0..4", "--alpha-db",
                                      "-15", "--n-samples", "3000", "--seed", "99"};
  auto with_output = [&](const std::string& path) {
    auto v = args;
    v.push_back("-o");
    v.push_back(path);
    return v;
  };
  setenv("RECYC_MISO_THREADS", "1", 1);
  REQUIRE(run(with_output(a)).code == 0);
  setenv("RECYC_MISO_THREADS", "8", 1);
  REQUIRE(run(with_output(b)).code == 0);
  unsetenv("RECYC_MISO_THREADS");
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).find("seed=99") != std::string::npos);
}

TEST_CASE("unwritable output is a runtime failure") {
  const auto r = run({"schedule-once", "--h", "1,2", "--alpha", "0.1", "-o",
                      "/nonexistent-dir/x/out.csv"});
  CHECK(r.code == 1);
}

TEST_CASE("audit and active-sweep subcommands") {
  auto r = run({"audit", "--m", "4", "--alpha-db", "-15", "--n-samples", "2000"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const auto doc = read_csv(in);
  CHECK(doc.header.front() == "analytic_harvest");
  CHECK(doc.rows.size() == 1);

  r = run({"active-sweep", "--m", "2..4", "--alpha-db", "-15", "--n-samples", "500"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("m,avg_active,avg_harvesting") != std::string::npos);
}

TEST_CASE("parse_range") {
  CHECK(cli::parse_range("5..8", "m") == std::vector<int>{5, 6, 7, 8});
  CHECK(cli::parse_range("5..25:10", "m") == std::vector<int>{5, 15, 25});
  CHECK(cli::parse_range("7", "m") == std::vector<int>{7});
  CHECK(cli::parse_range("1,4,9", "m") == std::vector<int>{1, 4, 9});
  CHECK_THROWS_AS(cli::parse_range("3..x", "m"), ConfigError);
  CHECK_THROWS_AS(cli::parse_range("3..5:0", "m"), ConfigError);
}

TEST_CASE("write_csv") {
  CsvDocument empty{"seed=1", {"m", "rate"}, {}};
  std::ostringstream out;
  write_csv(out, empty);
  CHECK(out.str() == "# config: seed=1\nm,rate\n");

  CsvDocument quoted{"k=v", {"a", "b"}, {{"x,y", "say \"hi\""}}};
  std::ostringstream q;
  write_csv(q, quoted);
  std::istringstream back(q.str());
  const auto doc = read_csv(back);
  CHECK(doc.rows[0] == quoted.rows[0]);
  CHECK(doc.config == "k=v");

  CsvDocument ragged{"", {"a"}, {{"1", "2"}}};
  std::ostringstream r;
  CHECK_THROWS_AS(write_csv(r, ragged), Error);
}

TEST_CASE("numeric fields survive a write/read round trip") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  CsvDocument doc{"seed=12", {"x"}, {}};
  std::vector<double> values;
  std::vector<double> raw;
  for (int i = 0; i < 2000; ++i) {
    const double v = mant(rng) * std::pow(10.0, expo(rng));
    raw.push_back(v);
    const double emitted = std::stod(format_number(v));
    values.push_back(emitted);
    doc.rows.push_back({format_number(emitted)});
  }
  std::ostringstream out;
  write_csv(out, doc);
  std::istringstream in(out.str());
  const auto back = read_csv(in);
  REQUIRE(back.rows.size() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double parsed = std::stod(back.rows[i][0]);
    CHECK(std::abs(parsed - values[i]) <= 1e-12 * std::abs(values[i]));
    CHECK(std::abs(parsed - raw[i]) <= 5e-12 * std::abs(raw[i]));
  }
}
