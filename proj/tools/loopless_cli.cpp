// Command line front end: run, sweep-p, compare-all, plotdata, solve-ref.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 reference-solve failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loopless/errors.hpp"
#include "loopless/harness.hpp"

namespace {

using namespace loopless;
using namespace loopless::harness;

constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kReferenceError = 4;

struct SharedFlags {
  std::optional<std::string> config;
  std::optional<std::string> data;
  std::optional<std::string> synthetic;
  std::optional<std::size_t> dim;
  bool normalize = false;
  std::optional<std::string> loss;
  std::optional<double> mu;
  std::optional<std::string> alg;
  std::optional<std::string> preset;
  std::optional<double> eta, p, theta1, theta2;
  std::optional<std::uint64_t> m;
  std::optional<double> epochs;
  std::optional<double> checkpoint_every;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> diagnostics;
  std::optional<std::string> out;
  std::optional<double> ref_tol;
  std::optional<double> ref_epochs;

  void attach(CLI::App* app, bool with_algorithm) {
    app->add_option("--config", config, "JSON config file; flags override its keys");
    app->add_option("--data", data, "LIBSVM dataset file");
    app->add_option("--synthetic", synthetic, "synthetic ridge instance n,d,kappa[,seed]");
    app->add_option("--dim", dim, "pad the feature dimension of --data");
    app->add_flag("--normalize", normalize, "scale every sample to unit norm");
    app->add_option("--loss", loss, "logistic | ridge")->check(CLI::IsMember({"logistic", "ridge"}));
    app->add_option("--mu", mu, "L2 regularisation weight");
    if (with_algorithm)
      app->add_option("--alg", alg, "gd | svrg | l-svrg | katyusha | l-katyusha")
          ->check(CLI::IsMember({"gd", "svrg", "l-svrg", "katyusha", "l-katyusha"}));
    app->add_option("--preset", preset, "theory | none")->check(CLI::IsMember({"theory", "none"}));
    app->add_option("--eta", eta, "step size");
    app->add_option("--p", p, "reference refresh probability");
    app->add_option("--theta1", theta1, "Katyusha momentum theta1");
    app->add_option("--theta2", theta2, "Katyusha momentum theta2");
    app->add_option("--m", m, "inner loop length of the loopy methods");
    app->add_option("--epochs", epochs, "epoch budget");
    app->add_option("--checkpoint-every", checkpoint_every, "epochs between trace records");
    app->add_option("--seed", seed, "64-bit seed");
    app->add_option("--diagnostics", diagnostics, "none | distance | lyapunov | lemmas")
        ->check(CLI::IsMember({"none", "distance", "lyapunov", "lemmas"}));
    app->add_option("--out", out, "output directory");
    app->add_option("--reference-tolerance", ref_tol, "gradient-norm tolerance of the reference solve");
    app->add_option("--reference-max-epochs", ref_epochs, "epoch budget of the reference solve");
  }

  RunConfig build() const {
    RunConfig c;
    if (config) {
      std::ifstream in(*config);
      if (!in) throw ConfigError("cannot open config '" + *config + "'");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      c = config_from_json(j);
    }
    if (data) {
      c.data_path = *data;
      c.synthetic.reset();
    }
    if (synthetic) {
      c.synthetic = parse_synthetic_spec(*synthetic);
      if (!data) c.data_path.reset();
    }
    if (dim) c.dim = dim;
    if (normalize) c.normalize = true;
    if (loss) c.loss = loss_kind_from_string(*loss);
    if (mu) c.mu = mu;
    if (alg) c.algorithm = algorithm_from_string(*alg);
    const bool explicit_params = eta || p || theta1 || theta2 || m;
    if (preset) c.theory_preset = *preset == "theory";
    else if (explicit_params && !config) c.theory_preset = false;
    if (eta) c.params.eta = eta;
    if (p) c.params.p = p;
    if (theta1) c.params.theta1 = theta1;
    if (theta2) c.params.theta2 = theta2;
    if (m) c.params.m = m;
    if (epochs) c.epochs = *epochs;
    if (checkpoint_every) c.checkpoint_every = *checkpoint_every;
    if (seed) c.seed = *seed;
    if (diagnostics) c.diagnostics = diagnostics_from_string(*diagnostics);
    if (out) c.out = *out;
    if (ref_tol) c.reference_tolerance = *ref_tol;
    if (ref_epochs) c.reference_max_epochs = *ref_epochs;
    return c;
  }
};

template <class T>
std::vector<T> split_list(const std::string& text, T (*convert)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      out.push_back(convert(item));
    } catch (const std::logic_error&) {
      throw ConfigError("malformed list entry '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loopless variance-reduced optimizers: experiment runner"};
  app.require_subcommand(1);

  SharedFlags run_flags, sweep_flags, compare_flags, ref_flags;
  auto* run_cmd = app.add_subcommand("run", "run one algorithm and write a trace CSV plus JSON sidecar");
  run_flags.attach(run_cmd, true);

  auto* sweep_cmd = app.add_subcommand("sweep-p", "L-SVRG p = 1/l against loopy SVRG m = l over a loop-length grid");
  sweep_flags.attach(sweep_cmd, false);
  std::optional<std::string> grid_text;
  sweep_cmd->add_option("--grid", grid_text, "comma-separated loop lengths (default: the five-point grid)");

  auto* compare_cmd = app.add_subcommand("compare-all", "theory presets of every algorithm over a seed set");
  compare_flags.attach(compare_cmd, false);
  std::string algs_text = "gd,svrg,l-svrg,katyusha,l-katyusha";
  std::size_t seed_count = 10;
  std::string thresholds_text = "1e-4,1e-8";
  compare_cmd->add_option("--algs", algs_text, "comma-separated algorithms");
  compare_cmd->add_option("--seeds", seed_count, "number of seeds, counted up from --seed");
  compare_cmd->add_option("--thresholds", thresholds_text, "relative distance thresholds");

  auto* plot_cmd = app.add_subcommand("plotdata", "merge trace CSVs into one long-format table");
  std::vector<std::string> plot_files;
  std::string metrics_text = "dist_sq";
  std::optional<std::string> plot_out;
  plot_cmd->add_option("traces", plot_files, "trace CSV files")->required();
  plot_cmd->add_option("--metrics", metrics_text, "comma-separated metric columns");
  plot_cmd->add_option("--out", plot_out, "output file (default: stdout)");

  auto* ref_cmd = app.add_subcommand("solve-ref", "solve for the reference minimiser and write reference.json");
  ref_flags.attach(ref_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run_cmd) {
      std::cout << cli_run(run_flags.build()).string() << '\n';
    } else if (*sweep_cmd) {
      std::optional<std::vector<std::uint64_t>> grid;
      if (grid_text)
        grid = split_list<std::uint64_t>(*grid_text, [](const std::string& s) -> std::uint64_t { return std::stoull(s); });
      for (const auto& f : cli_sweep_p(sweep_flags.build(), grid)) std::cout << f.string() << '\n';
    } else if (*compare_cmd) {
      CompareOptions opts;
      opts.algorithms =
          split_list<Algorithm>(algs_text, [](const std::string& s) { return algorithm_from_string(s); });
      opts.thresholds = split_list<double>(thresholds_text, [](const std::string& s) { return std::stod(s); });
      const RunConfig base = compare_flags.build();
      for (std::size_t k = 0; k < seed_count; ++k) opts.seeds.push_back(base.seed + k);
      if (opts.seeds.empty()) throw ConfigError("--seeds must be at least 1");
      std::cout << cli_compare_all(base, opts).string() << '\n';
    } else if (*plot_cmd) {
      std::vector<std::filesystem::path> paths(plot_files.begin(), plot_files.end());
      const auto metrics = split_list<std::string>(metrics_text, [](const std::string& s) { return s; });
      if (plot_out) {
        std::ofstream out(*plot_out, std::ios::binary);
        if (!out) throw DataError("cannot write '" + *plot_out + "'");
        emit_plotdata(paths, metrics, out);
      } else {
        emit_plotdata(paths, metrics, std::cout);
      }
    } else if (*ref_cmd) {
      std::cout << cli_solve_ref(ref_flags.build()).string() << '\n';
    }
  } catch (const ReferenceSolveError& e) {
    std::cerr << "error: " << e.what() << " (best gradient norm " << e.best_grad_norm() << ")\n";
    return kReferenceError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
