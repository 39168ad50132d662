#include "loopless/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loopless/errors.hpp"

namespace loopless {

std::string_view to_string(Algorithm alg) noexcept {
  switch (alg) {
    case Algorithm::gd: return "gd";
    case Algorithm::svrg: return "svrg";
    case Algorithm::lsvrg: return "l-svrg";
    case Algorithm::katyusha: return "katyusha";
    case Algorithm::lkatyusha: return "l-katyusha";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view name) {
  for (auto alg : {Algorithm::gd, Algorithm::svrg, Algorithm::lsvrg, Algorithm::katyusha, Algorithm::lkatyusha})
    if (to_string(alg) == name) return alg;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

Vector variance_reduced_gradient(const Oracle& oracle, std::size_t i, const Vector& x, const Vector& w,
                                 const Vector& grad_w) {
  Vector correction = grad_w - oracle.grad_i(i, w);
  Vector g = oracle.grad_i(i, x);
  g += correction;
  return g;
}

namespace {

void require_probability(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("probability p must lie in (0, 1], got " + std::to_string(p));
}

void require_step(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("step size must be positive and finite");
}

void require_thetas(double theta1, double theta2) {
  if (!(theta1 > 0.0) || !(theta2 > 0.0)) throw ConfigError("theta1 and theta2 must be positive");
  if (!(theta1 + theta2 <= 1.0)) throw ConfigError("theta1 + theta2 must not exceed 1");
}

void require_point(const Oracle& oracle, const Vector& x0) {
  if (static_cast<std::size_t>(x0.size()) != oracle.dim())
    throw DimensionError("initial point has dimension " + std::to_string(x0.size()) + ", expected " +
                         std::to_string(oracle.dim()));
  if (!x0.allFinite()) throw ConfigError("initial point has non-finite entries");
}

}  // namespace

// ---------------------------------------------------------------------------

Vector gd_step(const Vector& x, const Oracle& oracle, double step) {
  require_step(step);
  return x - step * oracle.full_grad(x);
}

GdState gd_init(const Oracle& oracle, Vector x0, double step) {
  require_step(step);
  require_point(oracle, x0);
  GdState s;
  s.grad = oracle.full_grad(x0);
  s.x = std::move(x0);
  s.step = step;
  s.oracle_calls = oracle.n();
  return s;
}

void gd_step(GdState& s, const Oracle& oracle) {
  s.x = s.x - s.step * s.grad;
  s.grad = oracle.full_grad(s.x);
  s.oracle_calls += oracle.n();
  ++s.k;
}

// ---------------------------------------------------------------------------

LsvrgParams lsvrg_theory_params(const Oracle& oracle) {
  return {1.0 / (6.0 * oracle.smoothness()), 1.0 / static_cast<double>(oracle.n())};
}

LsvrgState lsvrg_init(const Oracle& oracle, Vector x0, const LsvrgParams& params) {
  require_step(params.eta);
  require_probability(params.p);
  require_point(oracle, x0);
  LsvrgState s;
  s.grad_w = oracle.full_grad(x0);
  s.w = x0;
  s.x = std::move(x0);
  s.eta = params.eta;
  s.p = params.p;
  s.oracle_calls = oracle.n();
  return s;
}

void lsvrg_apply(LsvrgState& s, const Oracle& oracle, std::size_t i, bool refresh) {
  const Vector g = variance_reduced_gradient(oracle, i, s.x, s.w, s.grad_w);
  s.oracle_calls += 2;
  Vector next = s.x - s.eta * g;
  if (refresh) {
    s.w = s.x;
    s.grad_w = oracle.full_grad(s.w);
    s.oracle_calls += oracle.n();
  }
  s.x = std::move(next);
  ++s.k;
}

void lsvrg_step(LsvrgState& s, const Oracle& oracle, Rng& rng) {
  const std::size_t i = rng.uniform_index(oracle.n());
  const bool refresh = rng.bernoulli(s.p);
  lsvrg_apply(s, oracle, i, refresh);
}

// ---------------------------------------------------------------------------

LkatyushaParams lkatyusha_theory_params(const Oracle& oracle) {
  const double n = static_cast<double>(oracle.n());
  const double sigma = oracle.mu() / oracle.smoothness();
  return {std::min(std::sqrt(2.0 * sigma * n / 3.0), 0.5), 0.5, 1.0 / n};
}

double katyusha_step_size(double theta1, double theta2) noexcept {
  return theta2 / ((1.0 + theta2) * theta1);
}

LkatyushaState lkatyusha_init(const Oracle& oracle, Vector x0, const LkatyushaParams& params) {
  require_thetas(params.theta1, params.theta2);
  require_probability(params.p);
  require_point(oracle, x0);
  LkatyushaState s;
  s.grad_w = oracle.full_grad(x0);
  s.y = x0;
  s.z = x0;
  s.w = std::move(x0);
  s.theta1 = params.theta1;
  s.theta2 = params.theta2;
  s.p = params.p;
  s.smoothness = oracle.smoothness();
  s.sigma = oracle.mu() / s.smoothness;
  s.eta = katyusha_step_size(params.theta1, params.theta2);
  s.oracle_calls = oracle.n();
  return s;
}

Vector katyusha_interpolation(const LkatyushaState& s) {
  return s.theta1 * s.z + s.theta2 * s.w + (1.0 - s.theta1 - s.theta2) * s.y;
}

void lkatyusha_apply(LkatyushaState& s, const Oracle& oracle, std::size_t i, bool refresh) {
  const Vector x = katyusha_interpolation(s);
  const Vector g = variance_reduced_gradient(oracle, i, x, s.w, s.grad_w);
  s.oracle_calls += 2;
  const double es = s.eta * s.sigma;
  Vector z_next = (es * x + s.z - (s.eta / s.smoothness) * g) / (1.0 + es);
  Vector y_next = x + s.theta1 * (z_next - s.z);
  if (refresh) {
    s.w = s.y;
    s.grad_w = oracle.full_grad(s.w);
    s.oracle_calls += oracle.n();
  }
  s.z = std::move(z_next);
  s.y = std::move(y_next);
  ++s.k;
}

void lkatyusha_step(LkatyushaState& s, const Oracle& oracle, Rng& rng) {
  const std::size_t i = rng.uniform_index(oracle.n());
  const bool refresh = rng.bernoulli(s.p);
  lkatyusha_apply(s, oracle, i, refresh);
}

// ---------------------------------------------------------------------------

std::uint64_t loop_length_for(double p) {
  require_probability(p);
  return static_cast<std::uint64_t>(std::ceil(1.0 / p));
}

LoopySvrgState loopy_svrg_init(const Oracle& oracle, Vector x0, double eta, std::uint64_t m) {
  if (m == 0) throw ConfigError("loop length m must be at least 1");
  LoopySvrgState s;
  s.inner = lsvrg_init(oracle, std::move(x0), {eta, 1.0 / static_cast<double>(m)});
  s.m = m;
  return s;
}

LoopyKatyushaState loopy_katyusha_init(const Oracle& oracle, Vector x0, double theta1, double theta2,
                                       std::uint64_t m) {
  if (m == 0) throw ConfigError("loop length m must be at least 1");
  LoopyKatyushaState s;
  s.inner = lkatyusha_init(oracle, std::move(x0), {theta1, theta2, 1.0 / static_cast<double>(m)});
  s.m = m;
  return s;
}

void loopy_svrg_apply(LoopySvrgState& s, const Oracle& oracle, std::size_t i) {
  const bool refresh = s.j + 1 == s.m;
  lsvrg_apply(s.inner, oracle, i, refresh);
  s.j = refresh ? 0 : s.j + 1;
}

void loopy_svrg_step(LoopySvrgState& s, const Oracle& oracle, Rng& rng) {
  loopy_svrg_apply(s, oracle, rng.uniform_index(oracle.n()));
}

void loopy_katyusha_apply(LoopyKatyushaState& s, const Oracle& oracle, std::size_t i) {
  const bool refresh = s.j + 1 == s.m;
  lkatyusha_apply(s.inner, oracle, i, refresh);
  s.j = refresh ? 0 : s.j + 1;
}

void loopy_katyusha_step(LoopyKatyushaState& s, const Oracle& oracle, Rng& rng) {
  loopy_katyusha_apply(s, oracle, rng.uniform_index(oracle.n()));
}

// ---------------------------------------------------------------------------

ResolvedParams resolve_params(Algorithm alg, const Oracle& oracle, const MethodParams& given, bool strict) {
  const auto reject = [&](bool present, const char* name) {
    if (strict && present)
      throw ConfigError(std::string("parameter '") + name + "' does not apply to " + std::string(to_string(alg)));
  };

  ResolvedParams r;
  r.algorithm = alg;
  const double L = oracle.smoothness();
  const double n = static_cast<double>(oracle.n());

  switch (alg) {
    case Algorithm::gd:
      reject(given.p.has_value(), "p");
      reject(given.theta1.has_value(), "theta1");
      reject(given.theta2.has_value(), "theta2");
      reject(given.m.has_value(), "m");
      r.eta = given.eta.value_or(1.0 / L);
      require_step(r.eta);
      break;
    case Algorithm::lsvrg:
    case Algorithm::svrg: {
      reject(given.theta1.has_value(), "theta1");
      reject(given.theta2.has_value(), "theta2");
      const auto preset = lsvrg_theory_params(oracle);
      r.eta = given.eta.value_or(preset.eta);
      require_step(r.eta);
      if (alg == Algorithm::lsvrg) {
        reject(given.m.has_value(), "m");
        r.p = given.p.value_or(preset.p);
        require_probability(r.p);
      } else {
        r.m = given.m ? *given.m : loop_length_for(given.p.value_or(preset.p));
        if (r.m == 0) throw ConfigError("loop length m must be at least 1");
        r.p = 1.0 / static_cast<double>(r.m);
      }
      break;
    }
    case Algorithm::lkatyusha:
    case Algorithm::katyusha: {
      reject(given.eta.has_value(), "eta");
      const auto preset = lkatyusha_theory_params(oracle);
      r.theta1 = given.theta1.value_or(preset.theta1);
      r.theta2 = given.theta2.value_or(preset.theta2);
      require_thetas(r.theta1, r.theta2);
      r.eta = katyusha_step_size(r.theta1, r.theta2);
      r.sigma = oracle.mu() / L;
      if (alg == Algorithm::lkatyusha) {
        reject(given.m.has_value(), "m");
        r.p = given.p.value_or(preset.p);
        require_probability(r.p);
      } else {
        r.m = given.m ? *given.m : loop_length_for(given.p.value_or(1.0 / n));
        if (r.m == 0) throw ConfigError("loop length m must be at least 1");
        r.p = 1.0 / static_cast<double>(r.m);
      }
      break;
    }
  }
  return r;
}

OptimizerState make_state(const ResolvedParams& r, const Oracle& oracle, Vector x0) {
  switch (r.algorithm) {
    case Algorithm::gd: return gd_init(oracle, std::move(x0), r.eta);
    case Algorithm::svrg: return loopy_svrg_init(oracle, std::move(x0), r.eta, r.m);
    case Algorithm::lsvrg: return lsvrg_init(oracle, std::move(x0), {r.eta, r.p});
    case Algorithm::katyusha: return loopy_katyusha_init(oracle, std::move(x0), r.theta1, r.theta2, r.m);
    case Algorithm::lkatyusha: return lkatyusha_init(oracle, std::move(x0), {r.theta1, r.theta2, r.p});
  }
  throw ConfigError("unknown algorithm");
}

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

Algorithm algorithm_of(const OptimizerState& state) noexcept {
  constexpr Algorithm order[] = {Algorithm::gd, Algorithm::svrg, Algorithm::lsvrg, Algorithm::katyusha,
                                 Algorithm::lkatyusha};
  return order[state.index()];
}

void step(OptimizerState& state, const Oracle& oracle, Rng& rng) {
  std::visit(overloaded{[&](GdState& s) { gd_step(s, oracle); },
                        [&](LoopySvrgState& s) { loopy_svrg_step(s, oracle, rng); },
                        [&](LsvrgState& s) { lsvrg_step(s, oracle, rng); },
                        [&](LoopyKatyushaState& s) { loopy_katyusha_step(s, oracle, rng); },
                        [&](LkatyushaState& s) { lkatyusha_step(s, oracle, rng); }},
             state);
}

const Vector& tracked_point(const OptimizerState& state) noexcept {
  return std::visit(overloaded{[](const GdState& s) -> const Vector& { return s.x; },
                               [](const LoopySvrgState& s) -> const Vector& { return s.inner.x; },
                               [](const LsvrgState& s) -> const Vector& { return s.x; },
                               [](const LoopyKatyushaState& s) -> const Vector& { return s.inner.y; },
                               [](const LkatyushaState& s) -> const Vector& { return s.y; }},
                    state);
}

const Vector* reference_point(const OptimizerState& state) noexcept {
  return std::visit(overloaded{[](const GdState&) -> const Vector* { return nullptr; },
                               [](const LoopySvrgState& s) -> const Vector* { return &s.inner.w; },
                               [](const LsvrgState& s) -> const Vector* { return &s.w; },
                               [](const LoopyKatyushaState& s) -> const Vector* { return &s.inner.w; },
                               [](const LkatyushaState& s) -> const Vector* { return &s.w; }},
                    state);
}

const Vector* reference_gradient(const OptimizerState& state) noexcept {
  return std::visit(overloaded{[](const GdState&) -> const Vector* { return nullptr; },
                               [](const LoopySvrgState& s) -> const Vector* { return &s.inner.grad_w; },
                               [](const LsvrgState& s) -> const Vector* { return &s.grad_w; },
                               [](const LoopyKatyushaState& s) -> const Vector* { return &s.inner.grad_w; },
                               [](const LkatyushaState& s) -> const Vector* { return &s.grad_w; }},
                    state);
}

std::uint64_t oracle_calls(const OptimizerState& state) noexcept {
  return std::visit(overloaded{[](const GdState& s) { return s.oracle_calls; },
                               [](const LoopySvrgState& s) { return s.inner.oracle_calls; },
                               [](const LsvrgState& s) { return s.oracle_calls; },
                               [](const LoopyKatyushaState& s) { return s.inner.oracle_calls; },
                               [](const LkatyushaState& s) { return s.oracle_calls; }},
                    state);
}

std::uint64_t iteration(const OptimizerState& state) noexcept {
  return std::visit(overloaded{[](const GdState& s) { return s.k; },
                               [](const LoopySvrgState& s) { return s.inner.k; },
                               [](const LsvrgState& s) { return s.k; },
                               [](const LoopyKatyushaState& s) { return s.inner.k; },
                               [](const LkatyushaState& s) { return s.k; }},
                    state);
}

}  // namespace loopless
