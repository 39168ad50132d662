#ifndef LOOPLESS_RUNNER_HPP
#define LOOPLESS_RUNNER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "loopless/optimizers.hpp"

namespace loopless {

/// Lyapunov values at a checkpoint. Only the fields of the matching family
/// are set: phi/dist_sq/dk for the SVRG family, psi/zk/yk/wk for Katyusha.
struct LyapunovReport {
  std::optional<double> phi;
  std::optional<double> dist_sq;
  std::optional<double> dk;
  std::optional<double> psi;
  std::optional<double> zk;
  std::optional<double> yk;
  std::optional<double> wk;
};

struct TraceRecord {
  double epoch = 0.0;  // oracle_calls / n
  std::uint64_t iteration = 0;
  std::uint64_t oracle_calls = 0;
  std::optional<double> dist_sq;  // ||tracked - x*||^2
  std::optional<double> f_gap;    // f(tracked) - f*
  std::optional<LyapunovReport> lyapunov;
  std::optional<double> lemma_min_slack;
  std::int64_t wall_ns = 0;
};

struct RunOptions {
  /// Work budget in epochs, counted after the initial full gradient.
  double epochs = 0.0;
  /// Epochs between checkpoints.
  double checkpoint_every = 1.0;
  /// Optional early exit, evaluated on each completed checkpoint record.
  std::function<bool(const TraceRecord&)> stop_when;
};

/// Called at every checkpoint with a read-only view of the state; fills the
/// metric fields of the record.
using CheckpointHook = std::function<void(const OptimizerState&, TraceRecord&)>;

/// Steps `state` until the epoch budget is spent, recording the initial state,
/// every checkpoint, and the final state. Deterministic given the rng seed.
std::vector<TraceRecord> run(OptimizerState& state, const Oracle& oracle, const RunOptions& options, Rng& rng,
                             const CheckpointHook& hook = {});

}  // namespace loopless

#endif
