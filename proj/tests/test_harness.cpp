#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "loopless/csv.hpp"
#include "loopless/errors.hpp"
#include "loopless/harness.hpp"

using namespace loopless;
using namespace loopless::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("loopless_test_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  while (csv::read_row(in, fields)) rows.push_back(fields);
  return rows;
}

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.synthetic = SyntheticSpec{20, 5, 10.0, 3};
  c.loss = LossKind::ridge;
  c.epochs = 4.0;
  c.out = out;
  return c;
}

}  // namespace

TEST_CASE("synthetic spec parsing") {
  const auto s = parse_synthetic_spec("100,20,1e4");
  CHECK(s.n == 100);
  CHECK(s.d == 20);
  CHECK(s.kappa == 1e4);
  CHECK(s.seed == 0);
  CHECK(parse_synthetic_spec("5,2,3,9").seed == 9);
  CHECK_THROWS_AS(parse_synthetic_spec("5,2"), ConfigError);
  CHECK_THROWS_AS(parse_synthetic_spec("a,2,3"), ConfigError);
  CHECK_THROWS_AS(parse_synthetic_spec("5,2,3,4,5"), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_THROWS_AS(validate(c), ConfigError);  // no data source
  c.synthetic = SyntheticSpec{10, 2, 5.0, 0};
  CHECK_NOTHROW(validate(c));
  c.data_path = "x.libsvm";
  CHECK_THROWS_AS(validate(c), ConfigError);  // two sources
  c.data_path.reset();
  c.epochs = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.epochs = 1.0;
  c.checkpoint_every = -1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.checkpoint_every = 1.0;
  c.theory_preset = false;
  CHECK_THROWS_AS(validate(c), ConfigError);  // l-svrg without eta and p
  c.params.eta = 0.1;
  c.params.p = 0.5;
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("JSON configs round trip and reject unknown keys") {
  RunConfig c = small_config("out");
  c.algorithm = Algorithm::lkatyusha;
  c.mu = 0.25;
  c.seed = 77;
  c.diagnostics = Diagnostics::lyapunov;
  const RunConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.algorithm == Algorithm::lkatyusha);
  CHECK(back.synthetic->kappa == 10.0);

  auto j = config_to_json(c);
  j["learning_rate"] = 0.1;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("cli_run writes the trace and a sidecar with resolved presets") {
  const fs::path dir = scratch_dir("run");
  RunConfig c = small_config(dir);

  SUBCASE("l-svrg") {
    const fs::path csv_path = cli_run(c);
    CHECK(csv_path == dir / "l-svrg.csv");
    const auto side = nlohmann::json::parse(slurp(dir / "l-svrg.json"));
    const double L = side["L"].get<double>();
    CHECK(side["eta"].get<double>() == 1.0 / (6.0 * L));
    CHECK(side["p"].get<double>() == 1.0 / 20.0);
    CHECK(side["algorithm"] == "l-svrg");
    CHECK(side["seed"] == 0);
  }
  SUBCASE("l-katyusha") {
    c.algorithm = Algorithm::lkatyusha;
    cli_run(c);
    const auto side = nlohmann::json::parse(slurp(dir / "l-katyusha.json"));
    const double sigma = side["mu"].get<double>() / side["L"].get<double>();
    const double theta1 = std::min(std::sqrt(2.0 * sigma * 20.0 / 3.0), 0.5);
    CHECK(side["sigma"].get<double>() == sigma);
    CHECK(side["theta1"].get<double>() == theta1);
    CHECK(side["theta2"].get<double>() == 0.5);
    CHECK(side["p"].get<double>() == 1.0 / 20.0);
    CHECK(side["eta"].get<double>() == katyusha_step_size(theta1, 0.5));
  }
}

TEST_CASE("trace schema and epoch column") {
  const fs::path dir = scratch_dir("schema");
  for (auto alg : {Algorithm::gd, Algorithm::svrg, Algorithm::lsvrg, Algorithm::katyusha, Algorithm::lkatyusha}) {
    CAPTURE(to_string(alg));
    RunConfig c = small_config(dir);
    c.algorithm = alg;
    c.diagnostics = Diagnostics::lemmas;
    c.checkpoint_every = 0.5;
    const auto rows = read_csv(cli_run(c));
    REQUIRE(rows.size() >= 3);
    CHECK(rows[0] == trace_columns());
    double prev = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      REQUIRE(rows[r].size() == trace_columns().size());
      const double epoch = std::stod(rows[r][0]);
      CHECK(epoch >= 1.0);
      CHECK(epoch >= prev);
      prev = epoch;
    }
    const bool lemmas = alg == Algorithm::lsvrg || alg == Algorithm::lkatyusha;
    CHECK(rows[1][11].empty() == !lemmas);
  }
}

TEST_CASE("same config and seed give byte-identical traces apart from wall time") {
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  for (auto alg : {Algorithm::lsvrg, Algorithm::lkatyusha}) {
    RunConfig ca = small_config(a), cb = small_config(b);
    ca.algorithm = cb.algorithm = alg;
    ca.diagnostics = cb.diagnostics = Diagnostics::lyapunov;
    ca.seed = cb.seed = 1234;
    auto ra = read_csv(cli_run(ca)), rb = read_csv(cli_run(cb));
    for (auto* rows : {&ra, &rb})
      for (auto& row : *rows) row.pop_back();  // wall_ns
    CHECK(ra == rb);
  }
}

TEST_CASE("loop-length grid") {
  CHECK(loop_length_grid(100, 100.0) == std::vector<std::uint64_t>{100});
  CHECK(loop_length_grid(100, 1e4) == std::vector<std::uint64_t>{100, 316, 1000, 3162, 10000});
  std::vector<std::string> warnings;
  const auto clamped = loop_length_grid(1, 0.01, &warnings);
  CHECK(clamped.front() == 1);
  CHECK_FALSE(warnings.empty());
  for (auto l : clamped) CHECK(l >= 1);
}

TEST_CASE("sweep-p writes one trace per algorithm and loop length") {
  const fs::path dir = scratch_dir("sweep");
  RunConfig c = small_config(dir);
  c.epochs = 2.0;
  const auto files = cli_sweep_p(c, std::vector<std::uint64_t>{5, 20});
  REQUIRE(files.size() == 4);
  CHECK(fs::exists(dir / "l-svrg_len5.csv"));
  CHECK(fs::exists(dir / "svrg_len20.csv"));
  CHECK(nlohmann::json::parse(slurp(dir / "svrg_len5.json"))["m"] == 5);
  CHECK(nlohmann::json::parse(slurp(dir / "l-svrg_len5.json"))["p"].get<double>() == 0.2);

  std::stringstream out;
  emit_plotdata(files, {"dist_sq"}, out);
  std::size_t expected = 1;
  for (const auto& f : files) expected += read_csv(f).size() - 1;
  std::size_t lines = 0;
  for (std::string line; std::getline(out, line);) ++lines;
  CHECK(lines == expected);
}

TEST_CASE("plotdata row arithmetic and errors") {
  const fs::path dir = scratch_dir("plot");
  const fs::path trace = dir / "three.csv";
  {
    std::ofstream out(trace, std::ios::binary);
    write_trace_csv(out, {TraceRecord{1.0, 0, 10, 1.0, 0.5, {}, {}, 0}, TraceRecord{2.0, 5, 20, 0.5, 0.25, {}, {}, 0},
                          TraceRecord{3.0, 10, 30, 0.25, 0.125, {}, {}, 0}});
  }
  std::stringstream out;
  emit_plotdata({trace}, {"dist_sq", "f_gap"}, out);
  const auto rows = [&] {
    std::vector<std::vector<std::string>> r;
    std::vector<std::string> f;
    while (csv::read_row(out, f)) r.push_back(f);
    return r;
  }();
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"run_id", "algorithm", "epoch", "metric", "value"});
  CHECK(rows[1][0] == "three");
  CHECK(rows[1][1] == "unknown");

  std::stringstream sink;
  CHECK_THROWS_AS(emit_plotdata({trace}, {}, sink), ConfigError);
  CHECK_THROWS_AS(emit_plotdata({trace}, {"bogus"}, sink), ConfigError);
  const fs::path bad = dir / "bad.csv";
  std::ofstream(bad) << "epoch,dist_sq\r\n1,2\r\n";
  CHECK_THROWS_AS(emit_plotdata({trace, bad}, {"dist_sq"}, sink), DataError);
  CHECK_THROWS_AS(emit_plotdata({dir / "missing.csv"}, {"dist_sq"}, sink), DataError);
}

TEST_CASE("compare-all records unreached thresholds as inf") {
  const fs::path dir = scratch_dir("compare");
  RunConfig c = small_config(dir);
  c.epochs = 1.0;
  CompareOptions opts;
  opts.algorithms = {Algorithm::lsvrg};
  opts.seeds = {0, 1};
  opts.thresholds = {0.9, 1e-30};
  const auto rows = compare_all(c, opts);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.algorithm == Algorithm::lsvrg);
    if (r.threshold == 1e-30) CHECK(std::isinf(r.epochs));
    else CHECK(std::isfinite(r.epochs));
  }
  std::stringstream out;
  write_compare_csv(out, rows);
  CHECK(out.str().find(",inf\r\n") != std::string::npos);

  const fs::path summary = cli_compare_all(c, opts);
  CHECK(summary == dir / "summary.csv");
  CHECK(fs::exists(dir / "l-svrg_seed1.csv"));
}

TEST_CASE("epochs_to_threshold") {
  std::vector<TraceRecord> trace(3);
  trace[0].epoch = 1.0;
  trace[0].dist_sq = 4.0;
  trace[1].epoch = 2.0;
  trace[1].dist_sq = 1.0;
  trace[2].epoch = 3.0;
  trace[2].dist_sq = 0.01;
  CHECK(epochs_to_threshold(trace, 0.5) == 2.0);
  CHECK(epochs_to_threshold(trace, 1e-2) == 3.0);
  CHECK(std::isinf(epochs_to_threshold(trace, 1e-6)));
  CHECK(std::isinf(epochs_to_threshold({}, 0.5)));
}

TEST_CASE("file datasets and reference output") {
  const fs::path dir = scratch_dir("file");
  RunConfig c;
  c.data_path = fs::path(LOOPLESS_TEST_DATA_DIR) / "categorical50.libsvm";
  c.mu = 1e-2;
  c.epochs = 2.0;
  c.out = dir;
  const fs::path ref = cli_solve_ref(c);
  const auto j = nlohmann::json::parse(slurp(ref));
  CHECK(j["grad_norm"].get<double>() <= 1e-10);
  CHECK(j["n"] == 50);
  CHECK(fs::exists(cli_run(c)));

  c.data_path = dir / "missing.libsvm";
  CHECK_THROWS_AS(cli_run(c), DataError);
}

TEST_CASE("csv quoting") {
  CHECK(csv::quote("plain") == "plain");
  CHECK(csv::quote("a,b") == "\"a,b\"");
  CHECK(csv::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  std::stringstream ss;
  csv::write_row(ss, {"a,b", "c\"d", ""});
  std::vector<std::string> fields;
  REQUIRE(csv::read_row(ss, fields));
  CHECK(fields == std::vector<std::string>{"a,b", "c\"d", ""});
  CHECK(csv::format_real(std::numeric_limits<double>::infinity()) == "inf");
}
