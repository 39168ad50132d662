#include "loopless/runner.hpp"

#include <chrono>
#include <cmath>

#include "loopless/errors.hpp"

namespace loopless {

std::vector<TraceRecord> run(OptimizerState& state, const Oracle& oracle, const RunOptions& options, Rng& rng,
                             const CheckpointHook& hook) {
  if (!(options.epochs >= 0.0) || !std::isfinite(options.epochs))
    throw ConfigError("run: epoch budget must be a finite non-negative number");
  if (!(options.checkpoint_every > 0.0)) throw ConfigError("run: checkpoint stride must be positive");

  const double n = static_cast<double>(oracle.n());
  const auto start = std::chrono::steady_clock::now();
  std::vector<TraceRecord> trace;

  const auto record = [&] {
    TraceRecord r;
    r.oracle_calls = oracle_calls(state);
    r.epoch = static_cast<double>(r.oracle_calls) / n;
    r.iteration = iteration(state);
    if (hook) hook(state, r);
    r.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    trace.push_back(r);
    return options.stop_when && options.stop_when(trace.back());
  };

  if (record()) return trace;

  const double start_epoch = trace.front().epoch;
  const double budget_end = start_epoch + options.epochs;
  double next_checkpoint = start_epoch + options.checkpoint_every;
  bool last_recorded = true;

  while (static_cast<double>(oracle_calls(state)) / n < budget_end) {
    step(state, oracle, rng);
    last_recorded = false;
    const double epoch = static_cast<double>(oracle_calls(state)) / n;
    if (epoch >= next_checkpoint) {
      while (next_checkpoint <= epoch) next_checkpoint += options.checkpoint_every;
      last_recorded = true;
      if (record()) return trace;
    }
  }
  if (!last_recorded) record();
  return trace;
}

}  // namespace loopless
