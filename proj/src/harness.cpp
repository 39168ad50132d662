#include "loopless/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "loopless/csv.hpp"
#include "loopless/errors.hpp"

namespace loopless::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Diagnostics level) noexcept {
  switch (level) {
    case Diagnostics::none: return "none";
    case Diagnostics::distance: return "distance";
    case Diagnostics::lyapunov: return "lyapunov";
    case Diagnostics::lemmas: return "lemmas";
  }
  return "none";
}

Diagnostics diagnostics_from_string(std::string_view name) {
  for (auto d : {Diagnostics::none, Diagnostics::distance, Diagnostics::lyapunov, Diagnostics::lemmas})
    if (to_string(d) == name) return d;
  throw ConfigError("unknown diagnostics level '" + std::string(name) + "'");
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) parts.push_back(part);
  if (parts.size() != 3 && parts.size() != 4)
    throw ConfigError("--synthetic expects n,d,kappa[,seed], got '" + text + "'");
  SyntheticSpec s;
  try {
    std::size_t pos = 0;
    const auto whole = [&](const std::string& p) {
      if (pos != p.size()) throw std::invalid_argument(p);
    };
    const long long n = std::stoll(parts[0], &pos);
    whole(parts[0]);
    const long long d = std::stoll(parts[1], &pos);
    whole(parts[1]);
    s.kappa = std::stod(parts[2], &pos);
    whole(parts[2]);
    if (parts.size() == 4) {
      s.seed = std::stoull(parts[3], &pos);
      whole(parts[3]);
    }
    if (n < 1 || d < 1) throw std::invalid_argument("sizes");
    s.n = static_cast<std::size_t>(n);
    s.d = static_cast<std::size_t>(d);
  } catch (const std::logic_error&) {
    throw ConfigError("--synthetic expects n,d,kappa[,seed] with n, d >= 1, got '" + text + "'");
  }
  if (!(s.kappa >= 1.0) || !std::isfinite(s.kappa)) throw ConfigError("--synthetic kappa must be >= 1");
  return s;
}

void validate(const RunConfig& c) {
  if (c.data_path.has_value() == c.synthetic.has_value())
    throw ConfigError("exactly one of --data and --synthetic must be given");
  if (!(c.epochs > 0.0) || !std::isfinite(c.epochs)) throw ConfigError("--epochs must be positive");
  if (!(c.checkpoint_every > 0.0) || !std::isfinite(c.checkpoint_every))
    throw ConfigError("--checkpoint-every must be positive");
  if (c.mu && !(*c.mu > 0.0)) throw ConfigError("--mu must be positive");
  if (!(c.reference_tolerance > 0.0)) throw ConfigError("reference tolerance must be positive");
  if (!c.theory_preset) {
    const auto& p = c.params;
    const auto need = [&](bool ok, const char* what) {
      if (!ok)
        throw ConfigError(std::string("without --preset theory, ") + std::string(to_string(c.algorithm)) + " needs " +
                          what);
    };
    switch (c.algorithm) {
      case Algorithm::gd: need(p.eta.has_value(), "--eta"); break;
      case Algorithm::lsvrg: need(p.eta && p.p, "--eta and --p"); break;
      case Algorithm::svrg: need(p.eta && (p.m || p.p), "--eta and --m (or --p)"); break;
      case Algorithm::lkatyusha: need(p.theta1 && p.theta2 && p.p, "--theta1, --theta2 and --p"); break;
      case Algorithm::katyusha: need(p.theta1 && p.theta2 && (p.m || p.p), "--theta1, --theta2 and --m"); break;
    }
  }
}

namespace {

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig c) {
  static const std::vector<std::string> known = {
      "data",  "synthetic", "dim",   "normalize", "loss",   "mu",          "alg",  "preset",
      "eta",   "p",         "theta1", "theta2",   "m",      "epochs",      "checkpoint_every",
      "seed",  "diagnostics", "out", "run_id",    "x0",     "reference_tolerance", "reference_max_epochs"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key '" + key + "'");
  try {
    if (j.contains("data")) c.data_path = j.at("data").get<std::string>();
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      c.synthetic = s.is_string() ? parse_synthetic_spec(s.get<std::string>())
                                  : SyntheticSpec{s.at("n").get<std::size_t>(), s.at("d").get<std::size_t>(),
                                                  s.at("kappa").get<double>(), s.value("seed", std::uint64_t{0})};
    }
    read_optional(j, "dim", c.dim);
    if (j.contains("normalize")) c.normalize = j.at("normalize").get<bool>();
    if (j.contains("loss")) c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    read_optional(j, "mu", c.mu);
    if (j.contains("alg")) c.algorithm = algorithm_from_string(j.at("alg").get<std::string>());
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      if (preset != "theory" && preset != "none") throw ConfigError("preset must be 'theory' or 'none'");
      c.theory_preset = preset == "theory";
    }
    read_optional(j, "eta", c.params.eta);
    read_optional(j, "p", c.params.p);
    read_optional(j, "theta1", c.params.theta1);
    read_optional(j, "theta2", c.params.theta2);
    read_optional(j, "m", c.params.m);
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<double>();
    if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("diagnostics")) c.diagnostics = diagnostics_from_string(j.at("diagnostics").get<std::string>());
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    read_optional(j, "run_id", c.run_id);
    read_optional(j, "x0", c.x0);
    if (j.contains("reference_tolerance")) c.reference_tolerance = j.at("reference_tolerance").get<double>();
    if (j.contains("reference_max_epochs")) c.reference_max_epochs = j.at("reference_max_epochs").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  if (c.data_path) j["data"] = c.data_path->string();
  if (c.synthetic)
    j["synthetic"] = {{"n", c.synthetic->n}, {"d", c.synthetic->d}, {"kappa", c.synthetic->kappa},
                      {"seed", c.synthetic->seed}};
  if (c.dim) j["dim"] = *c.dim;
  j["normalize"] = c.normalize;
  j["loss"] = std::string(to_string(c.loss));
  if (c.mu) j["mu"] = *c.mu;
  j["alg"] = std::string(to_string(c.algorithm));
  j["preset"] = c.theory_preset ? "theory" : "none";
  if (c.params.eta) j["eta"] = *c.params.eta;
  if (c.params.p) j["p"] = *c.params.p;
  if (c.params.theta1) j["theta1"] = *c.params.theta1;
  if (c.params.theta2) j["theta2"] = *c.params.theta2;
  if (c.params.m) j["m"] = *c.params.m;
  j["epochs"] = c.epochs;
  j["checkpoint_every"] = c.checkpoint_every;
  j["seed"] = c.seed;
  j["diagnostics"] = std::string(to_string(c.diagnostics));
  j["out"] = c.out.string();
  if (c.run_id) j["run_id"] = *c.run_id;
  if (c.x0) j["x0"] = *c.x0;
  j["reference_tolerance"] = c.reference_tolerance;
  j["reference_max_epochs"] = c.reference_max_epochs;
  return j;
}

// ---------------------------------------------------------------------------

Problem build_problem(const RunConfig& c) {
  Problem problem;
  if (c.synthetic) {
    auto synth = synthesize_quadratic(c.synthetic->n, c.synthetic->d, c.synthetic->kappa, c.synthetic->seed);
    const double mu = c.mu.value_or(synth.mu);
    if (c.loss == LossKind::ridge && mu == synth.mu) problem.known_minimizer = std::move(synth.minimizer);
    problem.oracle = std::make_shared<const Oracle>(std::move(synth.data), c.loss, mu);
    std::ostringstream src;
    src << "synthetic:" << c.synthetic->n << ',' << c.synthetic->d << ',' << csv::format_real(c.synthetic->kappa)
        << ',' << c.synthetic->seed;
    problem.source = src.str();
  } else if (c.data_path) {
    ParseOptions opts;
    opts.dim = c.dim;
    Dataset data = load_libsvm(*c.data_path, opts);
    if (c.normalize) data = normalize_rows(data);
    problem.oracle = std::make_shared<const Oracle>(std::move(data), c.loss, c.mu.value_or(1e-3));
    problem.source = c.data_path->string();
  } else {
    throw ConfigError("no data source configured");
  }
  return problem;
}

ReferenceSolution build_reference(const Problem& problem, const RunConfig& c) {
  const Oracle& oracle = *problem.oracle;
  ReferenceOptions opts;
  opts.tolerance = c.reference_tolerance;
  opts.max_epochs = c.reference_max_epochs;
  if (oracle.kind() == LossKind::ridge && oracle.dim() <= 4000) opts.method = ReferenceMethod::normal_equations;
  return solve_reference(oracle, opts);
}

ResolvedParams resolve(const RunConfig& c, const Oracle& oracle) {
  return resolve_params(c.algorithm, oracle, c.params, /*strict=*/true);
}

RunResult execute(const RunConfig& c, const Problem& problem, const ReferenceSolution* ref,
                  const RunOptions* override_options) {
  const Oracle& oracle = *problem.oracle;
  if (c.diagnostics != Diagnostics::none && ref == nullptr)
    throw ConfigError("diagnostics require a reference solution");

  RunResult result;
  result.params = resolve(c, oracle);
  result.run_id = c.run_id.value_or(std::string(to_string(c.algorithm)));

  Vector x0 = Vector::Zero(static_cast<Eigen::Index>(oracle.dim()));
  if (c.x0) {
    if (c.x0->size() != oracle.dim())
      throw ConfigError("x0 has " + std::to_string(c.x0->size()) + " entries, expected " +
                        std::to_string(oracle.dim()));
    x0 = Eigen::Map<const Vector>(c.x0->data(), static_cast<Eigen::Index>(c.x0->size()));
  }
  OptimizerState state = make_state(result.params, oracle, std::move(x0));

  RunOptions options;
  if (override_options) options = *override_options;
  else {
    options.epochs = c.epochs;
    options.checkpoint_every = c.checkpoint_every;
  }

  CheckpointHook hook;
  if (c.diagnostics != Diagnostics::none) {
    const Diagnostics level = c.diagnostics;
    hook = [&oracle, ref, level](const OptimizerState& s, TraceRecord& r) {
      const Vector& point = tracked_point(s);
      r.dist_sq = (point - ref->x_star).squaredNorm();
      r.f_gap = oracle.value(point) - ref->f_star;
      if (level == Diagnostics::lyapunov || level == Diagnostics::lemmas) r.lyapunov = lyapunov_report(s, *ref, oracle);
      if (level == Diagnostics::lemmas)
        if (const auto report = lemma_report(s, *ref, oracle)) r.lemma_min_slack = report->min_relative_slack();
    };
  }
  if (c.diagnostics == Diagnostics::lemmas && oracle.n() > kEnumerationLimit)
    throw ConfigError("--diagnostics lemmas needs n <= " + std::to_string(kEnumerationLimit));

  Rng rng(c.seed);
  result.trace = run(state, oracle, options, rng, hook);
  return result;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> columns = {"epoch", "iteration", "oracle_calls", "dist_sq", "f_gap",
                                                   "phi",   "dk",        "psi",          "zk",      "yk",
                                                   "wk",    "lemma_min_slack",           "wall_ns"};
  return columns;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  csv::write_row(out, trace_columns());
  for (const auto& r : trace) {
    const LyapunovReport ly = r.lyapunov.value_or(LyapunovReport{});
    csv::write_row(out, {csv::format_real(r.epoch), std::to_string(r.iteration), std::to_string(r.oracle_calls),
                         csv::format_optional(r.dist_sq), csv::format_optional(r.f_gap), csv::format_optional(ly.phi),
                         csv::format_optional(ly.dk), csv::format_optional(ly.psi), csv::format_optional(ly.zk),
                         csv::format_optional(ly.yk), csv::format_optional(ly.wk),
                         csv::format_optional(r.lemma_min_slack), std::to_string(r.wall_ns)});
  }
}

json sidecar(const RunConfig& c, const Problem& problem, const ResolvedParams& p, const ReferenceSolution* ref,
             const std::string& run_id) {
  const Oracle& oracle = *problem.oracle;
  json j;
  j["run_id"] = run_id;
  j["algorithm"] = std::string(to_string(p.algorithm));
  j["source"] = problem.source;
  j["loss"] = std::string(to_string(oracle.kind()));
  j["n"] = oracle.n();
  j["d"] = oracle.dim();
  j["L"] = oracle.smoothness();
  j["mu"] = oracle.mu();
  j["kappa"] = oracle.condition_number();
  j["seed"] = c.seed;
  j["preset"] = c.theory_preset ? "theory" : "none";
  j["epochs"] = c.epochs;
  j["checkpoint_every"] = c.checkpoint_every;
  j["diagnostics"] = std::string(to_string(c.diagnostics));
  j["eta"] = p.eta;
  switch (p.algorithm) {
    case Algorithm::gd: break;
    case Algorithm::lsvrg: j["p"] = p.p; break;
    case Algorithm::svrg:
      j["m"] = p.m;
      break;
    case Algorithm::lkatyusha:
      j["p"] = p.p;
      j["theta1"] = p.theta1;
      j["theta2"] = p.theta2;
      j["sigma"] = p.sigma;
      break;
    case Algorithm::katyusha:
      j["m"] = p.m;
      j["theta1"] = p.theta1;
      j["theta2"] = p.theta2;
      j["sigma"] = p.sigma;
      break;
  }
  if (ref) {
    j["f_star"] = ref->f_star;
    j["reference_grad_norm"] = ref->grad_norm;
  }
  return j;
}

fs::path write_run(const RunConfig& c, const Problem& problem, const ReferenceSolution* ref, const RunResult& result) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw DataError("cannot create output directory '" + c.out.string() + "': " + ec.message());
  const fs::path csv_path = c.out / (result.run_id + ".csv");
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + csv_path.string() + "'");
    write_trace_csv(out, result.trace);
  }
  const fs::path json_path = c.out / (result.run_id + ".json");
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + json_path.string() + "'");
  out << sidecar(c, problem, result.params, ref, result.run_id).dump(2) << '\n';
  return csv_path;
}

// ---------------------------------------------------------------------------

fs::path cli_run(const RunConfig& c) {
  validate(c);
  const Problem problem = build_problem(c);
  std::optional<ReferenceSolution> ref;
  if (c.diagnostics != Diagnostics::none) ref = build_reference(problem, c);
  const RunResult result = execute(c, problem, ref ? &*ref : nullptr);
  return write_run(c, problem, ref ? &*ref : nullptr, result);
}

std::vector<std::uint64_t> loop_length_grid(std::size_t n_samples, double kappa, std::vector<std::string>* warnings) {
  const double n = static_cast<double>(n_samples);
  const double raw[] = {n, std::pow(kappa * n * n * n, 0.25), std::sqrt(kappa * n),
                        std::pow(kappa * kappa * kappa * n, 0.25), kappa};
  std::vector<std::uint64_t> grid;
  for (double value : raw) {
    double rounded = std::round(value);
    if (rounded < 1.0) {
      if (warnings) warnings->push_back("loop length " + csv::format_real(value) + " clamped to 1");
      rounded = 1.0;
    }
    const auto length = static_cast<std::uint64_t>(rounded);
    if (std::find(grid.begin(), grid.end(), length) == grid.end()) grid.push_back(length);
  }
  return grid;
}

std::vector<fs::path> cli_sweep_p(const RunConfig& base, const std::optional<std::vector<std::uint64_t>>& grid) {
  validate(base);
  const Problem problem = build_problem(base);
  std::optional<ReferenceSolution> ref;
  if (base.diagnostics != Diagnostics::none) ref = build_reference(problem, base);

  std::vector<std::string> warnings;
  const auto lengths = grid ? *grid : loop_length_grid(problem.oracle->n(), problem.oracle->condition_number(), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  std::vector<fs::path> files;
  for (const std::uint64_t length : lengths) {
    if (length == 0) throw ConfigError("loop lengths must be positive");
    RunConfig loopless = base;
    loopless.algorithm = Algorithm::lsvrg;
    loopless.params.m.reset();
    loopless.params.p = 1.0 / static_cast<double>(length);
    loopless.run_id = "l-svrg_len" + std::to_string(length);
    files.push_back(write_run(loopless, problem, ref ? &*ref : nullptr,
                              execute(loopless, problem, ref ? &*ref : nullptr)));

    RunConfig loopy = base;
    loopy.algorithm = Algorithm::svrg;
    loopy.params.p.reset();
    loopy.params.m = length;
    loopy.run_id = "svrg_len" + std::to_string(length);
    files.push_back(write_run(loopy, problem, ref ? &*ref : nullptr, execute(loopy, problem, ref ? &*ref : nullptr)));
  }
  return files;
}

double epochs_to_threshold(const std::vector<TraceRecord>& trace, double relative_threshold) {
  if (trace.empty() || !trace.front().dist_sq) return std::numeric_limits<double>::infinity();
  const double initial = *trace.front().dist_sq;
  for (const auto& r : trace) {
    if (!r.dist_sq) continue;
    if (initial == 0.0 ? *r.dist_sq == 0.0 : *r.dist_sq / initial <= relative_threshold) return r.epoch;
  }
  return std::numeric_limits<double>::infinity();
}

std::vector<CompareRow> compare_all(const RunConfig& base, const CompareOptions& options) {
  validate(base);
  if (options.algorithms.empty()) throw ConfigError("compare-all needs at least one algorithm");
  if (options.thresholds.empty()) throw ConfigError("compare-all needs at least one threshold");
  const Problem problem = build_problem(base);
  const ReferenceSolution ref = build_reference(problem, base);

  std::vector<std::uint64_t> seeds = options.seeds;
  if (seeds.empty())
    for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(base.seed + s);
  const double smallest = *std::min_element(options.thresholds.begin(), options.thresholds.end());

  std::vector<CompareRow> rows;
  for (const Algorithm alg : options.algorithms) {
    for (const std::uint64_t seed : seeds) {
      RunConfig c = base;
      c.algorithm = alg;
      c.theory_preset = true;
      c.params = {};
      c.seed = seed;
      if (c.diagnostics == Diagnostics::none) c.diagnostics = Diagnostics::distance;
      c.run_id = std::string(to_string(alg)) + "_seed" + std::to_string(seed);

      RunOptions run_options;
      run_options.epochs = c.epochs;
      run_options.checkpoint_every = c.checkpoint_every;
      auto initial = std::make_shared<std::optional<double>>();
      run_options.stop_when = [initial, smallest](const TraceRecord& r) {
        if (!r.dist_sq) return false;
        if (!*initial) *initial = *r.dist_sq;
        return **initial > 0.0 && *r.dist_sq / **initial <= smallest;
      };
      const RunResult result = execute(c, problem, &ref, &run_options);
      if (options.write_traces) write_run(c, problem, &ref, result);
      for (const double t : options.thresholds) rows.push_back({alg, seed, t, epochs_to_threshold(result.trace, t)});
    }
  }
  return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  csv::write_row(out, {"algorithm", "seed", "threshold", "epochs"});
  for (const auto& r : rows)
    csv::write_row(out, {std::string(to_string(r.algorithm)), std::to_string(r.seed), csv::format_real(r.threshold),
                         csv::format_real(r.epochs)});
}

fs::path cli_compare_all(const RunConfig& base, const CompareOptions& options) {
  const auto rows = compare_all(base, options);
  const fs::path path = base.out / "summary.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_compare_csv(out, rows);
  return path;
}

void emit_plotdata(const std::vector<fs::path>& traces, const std::vector<std::string>& metrics, std::ostream& out) {
  if (traces.empty()) throw ConfigError("plotdata needs at least one trace file");
  if (metrics.empty()) throw ConfigError("plotdata needs at least one metric");
  const auto& columns = trace_columns();
  std::vector<std::size_t> metric_columns;
  for (const auto& m : metrics) {
    const auto it = std::find(columns.begin(), columns.end(), m);
    if (it == columns.end() || m == "epoch") throw ConfigError("unknown metric '" + m + "'");
    metric_columns.push_back(static_cast<std::size_t>(it - columns.begin()));
  }

  csv::write_row(out, {"run_id", "algorithm", "epoch", "metric", "value"});
  for (const auto& path : traces) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open trace '" + path.string() + "'");
    const std::string run_id = path.stem().string();
    std::string algorithm = "unknown";
    fs::path side = path;
    side.replace_extension(".json");
    if (std::ifstream sj(side); sj) {
      try {
        algorithm = json::parse(sj).value("algorithm", algorithm);
      } catch (const json::exception&) {
        throw DataError("malformed sidecar '" + side.string() + "'");
      }
    }

    std::vector<std::string> fields;
    if (!csv::read_row(in, fields) || fields != columns)
      throw DataError("schema mismatch in '" + path.string() + "'");
    while (csv::read_row(in, fields)) {
      if (fields.size() != columns.size()) throw DataError("schema mismatch in '" + path.string() + "'");
      for (std::size_t k = 0; k < metrics.size(); ++k) {
        const auto& value = fields[metric_columns[k]];
        if (value.empty()) continue;
        csv::write_row(out, {run_id, algorithm, fields[0], metrics[k], value});
      }
    }
  }
}

fs::path cli_solve_ref(const RunConfig& c) {
  validate(c);
  const Problem problem = build_problem(c);
  const ReferenceSolution ref = build_reference(problem, c);
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw DataError("cannot create output directory '" + c.out.string() + "'");
  const fs::path path = c.out / "reference.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  json j;
  j["source"] = problem.source;
  j["loss"] = std::string(to_string(problem.oracle->kind()));
  j["n"] = problem.oracle->n();
  j["d"] = problem.oracle->dim();
  j["L"] = problem.oracle->smoothness();
  j["mu"] = problem.oracle->mu();
  j["f_star"] = ref.f_star;
  j["grad_norm"] = ref.grad_norm;
  j["epochs_used"] = ref.epochs_used;
  j["x_star"] = std::vector<double>(ref.x_star.data(), ref.x_star.data() + ref.x_star.size());
  out << j.dump(2) << '\n';
  return path;
}

}  // namespace loopless::harness
