#ifndef LOOPLESS_OPTIMIZERS_HPP
#define LOOPLESS_OPTIMIZERS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include "loopless/oracle.hpp"
#include "loopless/rng.hpp"

namespace loopless {

enum class Algorithm { gd, svrg, lsvrg, katyusha, lkatyusha };

std::string_view to_string(Algorithm alg) noexcept;
Algorithm algorithm_from_string(std::string_view name);

/// g = grad f_i(x) + (grad_w - grad f_i(w)). The bracket is formed first so
/// that it vanishes exactly whenever x and w coincide bitwise, or n == 1.
Vector variance_reduced_gradient(const Oracle& oracle, std::size_t i, const Vector& x, const Vector& w,
                                 const Vector& grad_w);

// ---------------------------------------------------------------------------
// Gradient descent

struct GdState {
  Vector x;
  Vector grad;  // full gradient at x
  double step = 0.0;
  std::uint64_t k = 0;
  std::uint64_t oracle_calls = 0;
};

Vector gd_step(const Vector& x, const Oracle& oracle, double step);
GdState gd_init(const Oracle& oracle, Vector x0, double step);
void gd_step(GdState& state, const Oracle& oracle);

// ---------------------------------------------------------------------------
// Loopless SVRG

struct LsvrgParams {
  double eta = 0.0;
  double p = 0.0;
};

/// eta = 1/(6L), p = 1/n.
LsvrgParams lsvrg_theory_params(const Oracle& oracle);

struct LsvrgState {
  Vector x;
  Vector w;
  Vector grad_w;
  double eta = 0.0;
  double p = 0.0;
  std::uint64_t k = 0;
  std::uint64_t oracle_calls = 0;
};

LsvrgState lsvrg_init(const Oracle& oracle, Vector x0, const LsvrgParams& params);

/// One iteration with sample `i` and coin outcome `refresh` fixed. The
/// reference point moves to the pre-update iterate x^k on refresh.
void lsvrg_apply(LsvrgState& state, const Oracle& oracle, std::size_t i, bool refresh);

/// Draws i, then the coin, from `rng` and applies them.
void lsvrg_step(LsvrgState& state, const Oracle& oracle, Rng& rng);

// ---------------------------------------------------------------------------
// Loopless Katyusha

struct LkatyushaParams {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double p = 0.0;
};

/// theta1 = min{sqrt(2 sigma n / 3), 1/2}, theta2 = 1/2, p = 1/n.
LkatyushaParams lkatyusha_theory_params(const Oracle& oracle);

/// eta = theta2 / ((1 + theta2) theta1).
double katyusha_step_size(double theta1, double theta2) noexcept;

struct LkatyushaState {
  Vector y;
  Vector z;
  Vector w;
  Vector grad_w;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double sigma = 0.0;
  double eta = 0.0;
  double p = 0.0;
  double smoothness = 0.0;
  std::uint64_t k = 0;
  std::uint64_t oracle_calls = 0;
};

LkatyushaState lkatyusha_init(const Oracle& oracle, Vector x0, const LkatyushaParams& params);

/// x^k = theta1 z^k + theta2 w^k + (1 - theta1 - theta2) y^k.
Vector katyusha_interpolation(const LkatyushaState& state);

/// One iteration with sample `i` and coin outcome `refresh` fixed. The
/// reference point moves to the pre-update y^k on refresh.
void lkatyusha_apply(LkatyushaState& state, const Oracle& oracle, std::size_t i, bool refresh);
void lkatyusha_step(LkatyushaState& state, const Oracle& oracle, Rng& rng);

// ---------------------------------------------------------------------------
// Loopy originals: the same inner updates with a deterministic refresh of the
// reference point every m iterations (to x^k for SVRG, y^k for Katyusha).

struct LoopySvrgState {
  LsvrgState inner;  // inner.p is unused by the update and holds 1/m
  std::uint64_t m = 1;
  std::uint64_t j = 0;
};

struct LoopyKatyushaState {
  LkatyushaState inner;  // inner.p holds 1/m
  std::uint64_t m = 1;
  std::uint64_t j = 0;
};

LoopySvrgState loopy_svrg_init(const Oracle& oracle, Vector x0, double eta, std::uint64_t m);
LoopyKatyushaState loopy_katyusha_init(const Oracle& oracle, Vector x0, double theta1, double theta2,
                                       std::uint64_t m);

void loopy_svrg_apply(LoopySvrgState& state, const Oracle& oracle, std::size_t i);
void loopy_svrg_step(LoopySvrgState& state, const Oracle& oracle, Rng& rng);
void loopy_katyusha_apply(LoopyKatyushaState& state, const Oracle& oracle, std::size_t i);
void loopy_katyusha_step(LoopyKatyushaState& state, const Oracle& oracle, Rng& rng);

/// m = ceil(1/p).
std::uint64_t loop_length_for(double p);

// ---------------------------------------------------------------------------
// Uniform stepping interface

using OptimizerState = std::variant<GdState, LoopySvrgState, LsvrgState, LoopyKatyushaState, LkatyushaState>;

/// Parameters of any algorithm; fields not used by an algorithm are ignored.
/// Unset fields are filled from the theory preset by resolve_params.
struct MethodParams {
  std::optional<double> eta;
  std::optional<double> p;
  std::optional<double> theta1;
  std::optional<double> theta2;
  std::optional<std::uint64_t> m;
};

struct ResolvedParams {
  Algorithm algorithm = Algorithm::gd;
  double eta = 0.0;  // step size (derived from the thetas for Katyusha)
  double p = 0.0;    // coin probability, or 1/m for the loopy methods
  double theta1 = 0.0;
  double theta2 = 0.0;
  double sigma = 0.0;
  std::uint64_t m = 0;  // loop length, loopy methods only
};

/// Theory presets: gd eta = 1/L; l-svrg eta = 1/(6L), p = 1/n; svrg
/// eta = 1/(6L), m = ceil(1/p) with p = 1/n; l-katyusha and katyusha use the
/// theta preset with p = 1/n (and m = ceil(1/p)). Explicit values override
/// preset entries. Throws ConfigError for fields the algorithm does not accept
/// when `strict` is set, and for out-of-range values.
ResolvedParams resolve_params(Algorithm alg, const Oracle& oracle, const MethodParams& explicit_params,
                              bool strict = true);

OptimizerState make_state(const ResolvedParams& params, const Oracle& oracle, Vector x0);

Algorithm algorithm_of(const OptimizerState& state) noexcept;
void step(OptimizerState& state, const Oracle& oracle, Rng& rng);

/// x^k for gd/svrg/l-svrg, y^k for katyusha/l-katyusha.
const Vector& tracked_point(const OptimizerState& state) noexcept;
const Vector* reference_point(const OptimizerState& state) noexcept;
const Vector* reference_gradient(const OptimizerState& state) noexcept;
std::uint64_t oracle_calls(const OptimizerState& state) noexcept;
std::uint64_t iteration(const OptimizerState& state) noexcept;

}  // namespace loopless

#endif
