#include "loopless/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loopless/errors.hpp"

namespace loopless {

namespace {

void require_same_space(const Oracle& oracle, const ReferenceSolution& ref, const Vector& v) {
  const auto d = static_cast<Eigen::Index>(oracle.dim());
  if (ref.x_star.size() != d || v.size() != d)
    throw DimensionError("diagnostics: state, reference and oracle dimensions differ");
  if (ref.grad_i_star.size() != oracle.n())
    throw DimensionError("diagnostics: reference was built for a different sample count");
}

void require_enumerable(const Oracle& oracle) {
  if (oracle.n() > kEnumerationLimit)
    throw ConfigError("exact enumeration needs n <= " + std::to_string(kEnumerationLimit) + ", got " +
                      std::to_string(oracle.n()));
}

double gap(const Oracle& oracle, const ReferenceSolution& ref, const Vector& v) {
  return std::max(0.0, oracle.value(v) - ref.f_star);
}

Eigen::MatrixXd ridge_hessian(const Oracle& oracle, Vector& rhs) {
  const auto d = static_cast<Eigen::Index>(oracle.dim());
  const auto& data = oracle.dataset();
  const double inv_n = 1.0 / static_cast<double>(oracle.n());
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d) * oracle.mu();
  rhs = Vector::Zero(d);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& r = data.row(i);
    for (std::size_t a = 0; a < r.nnz(); ++a) {
      const auto ia = static_cast<Eigen::Index>(r.indices[a]);
      rhs[ia] += inv_n * data.label(i) * r.values[a];
      for (std::size_t b = 0; b < r.nnz(); ++b)
        h(ia, static_cast<Eigen::Index>(r.indices[b])) += inv_n * r.values[a] * r.values[b];
    }
  }
  return h;
}

}  // namespace

ReferenceSolution make_reference(const Oracle& oracle, Vector x_star) {
  if (static_cast<std::size_t>(x_star.size()) != oracle.dim())
    throw DimensionError("make_reference: minimiser has the wrong dimension");
  ReferenceSolution ref;
  ref.grad_norm = oracle.full_grad(x_star).norm();
  ref.f_star = oracle.value(x_star);
  ref.grad_i_star.reserve(oracle.n());
  for (std::size_t i = 0; i < oracle.n(); ++i) ref.grad_i_star.push_back(oracle.grad_i(i, x_star));
  ref.x_star = std::move(x_star);
  return ref;
}

ReferenceSolution solve_reference(const Oracle& oracle, const ReferenceOptions& options) {
  if (!(options.tolerance > 0.0)) throw ConfigError("solve_reference: tolerance must be positive");
  Vector x = options.x0 ? *options.x0 : Vector::Zero(static_cast<Eigen::Index>(oracle.dim()));
  if (static_cast<std::size_t>(x.size()) != oracle.dim())
    throw DimensionError("solve_reference: starting point has the wrong dimension");

  if (options.method == ReferenceMethod::normal_equations) {
    if (oracle.kind() != LossKind::ridge) throw ConfigError("normal equations apply to the ridge loss only");
    Vector rhs;
    const Eigen::MatrixXd h = ridge_hessian(oracle, rhs);
    x = h.ldlt().solve(rhs);
  }

  const double step = 1.0 / oracle.smoothness();
  double epochs = 0.0;
  Vector g = oracle.full_grad(x);
  epochs += 1.0;
  double best = g.norm();
  while (g.norm() > options.tolerance) {
    if (epochs >= options.max_epochs)
      throw ReferenceSolveError("reference solve did not reach gradient norm " + std::to_string(options.tolerance) +
                                    " within " + std::to_string(options.max_epochs) + " epochs",
                                best);
    x -= step * g;
    g = oracle.full_grad(x);
    epochs += 1.0;
    best = std::min(best, g.norm());
  }
  ReferenceSolution ref = make_reference(oracle, std::move(x));
  ref.epochs_used = epochs;
  return ref;
}

// ---------------------------------------------------------------------------

double gradient_learning(const Oracle& oracle, const ReferenceSolution& ref, const Vector& w, double eta, double p) {
  require_same_space(oracle, ref, w);
  double acc = 0.0;
  Vector gi;
  for (std::size_t i = 0; i < oracle.n(); ++i) {
    oracle.grad_i(i, w, gi);
    acc += (gi - ref.grad_i_star[i]).squaredNorm();
  }
  return 4.0 * eta * eta / (p * static_cast<double>(oracle.n())) * acc;
}

PhiReport compute_phi(const LsvrgState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  require_same_space(oracle, ref, s.x);
  PhiReport r;
  r.dist_sq = (s.x - ref.x_star).squaredNorm();
  r.dk = gradient_learning(oracle, ref, s.w, s.eta, s.p);
  r.phi = r.dist_sq + r.dk;
  return r;
}

namespace {

double z_term(const LkatyushaState& s, const ReferenceSolution& ref, const Vector& z) {
  return s.smoothness * (1.0 + s.eta * s.sigma) / (2.0 * s.eta) * (z - ref.x_star).squaredNorm();
}

double w_weight(const LkatyushaState& s) { return s.theta2 * (1.0 + s.theta1) / (s.p * s.theta1); }

}  // namespace

PsiReport compute_psi(const LkatyushaState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  require_same_space(oracle, ref, s.y);
  PsiReport r;
  r.zk = z_term(s, ref, s.z);
  r.yk = gap(oracle, ref, s.y) / s.theta1;
  r.wk = w_weight(s) * gap(oracle, ref, s.w);
  r.psi = r.zk + r.yk + r.wk;
  return r;
}

std::optional<LyapunovReport> lyapunov_report(const OptimizerState& state, const ReferenceSolution& ref,
                                              const Oracle& oracle) {
  const auto from_phi = [](const PhiReport& p) {
    LyapunovReport r;
    r.phi = p.phi;
    r.dist_sq = p.dist_sq;
    r.dk = p.dk;
    return r;
  };
  const auto from_psi = [](const PsiReport& p) {
    LyapunovReport r;
    r.psi = p.psi;
    r.zk = p.zk;
    r.yk = p.yk;
    r.wk = p.wk;
    return r;
  };
  if (const auto* s = std::get_if<LsvrgState>(&state)) return from_phi(compute_phi(*s, ref, oracle));
  if (const auto* s = std::get_if<LoopySvrgState>(&state)) return from_phi(compute_phi(s->inner, ref, oracle));
  if (const auto* s = std::get_if<LkatyushaState>(&state)) return from_psi(compute_psi(*s, ref, oracle));
  if (const auto* s = std::get_if<LoopyKatyushaState>(&state)) return from_psi(compute_psi(s->inner, ref, oracle));
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

/// Visits the 2n (i, coin) branches with their probabilities, skipping
/// zero-probability coin outcomes.
template <class State, class Apply, class Visit>
void for_each_branch(const State& s, const Oracle& oracle, Apply apply, Visit visit) {
  const double inv_n = 1.0 / static_cast<double>(oracle.n());
  for (std::size_t i = 0; i < oracle.n(); ++i) {
    for (const bool refresh : {true, false}) {
      const double weight = inv_n * (refresh ? s.p : 1.0 - s.p);
      if (weight == 0.0) continue;
      State branch = s;
      apply(branch, oracle, i, refresh);
      visit(branch, weight);
    }
  }
}

}  // namespace

double exact_expected_phi_next(const LsvrgState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  require_enumerable(oracle);
  require_same_space(oracle, ref, s.x);
  double acc = 0.0;
  for_each_branch(s, oracle, lsvrg_apply,
                  [&](const LsvrgState& b, double weight) { acc += weight * compute_phi(b, ref, oracle).phi; });
  return acc;
}

double exact_expected_psi_next(const LkatyushaState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  require_enumerable(oracle);
  require_same_space(oracle, ref, s.y);
  double acc = 0.0;
  for_each_branch(s, oracle, lkatyusha_apply,
                  [&](const LkatyushaState& b, double weight) { acc += weight * compute_psi(b, ref, oracle).psi; });
  return acc;
}

double phi_contraction_bound(const LsvrgState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  const auto r = compute_phi(s, ref, oracle);
  return (1.0 - s.eta * oracle.mu()) * r.dist_sq + (1.0 - s.p / 2.0) * r.dk;
}

double psi_contraction_bound(const LkatyushaState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  const auto r = compute_psi(s, ref, oracle);
  return r.zk / (1.0 + s.eta * s.sigma) + (1.0 - s.theta1 * (1.0 - s.theta2)) * r.yk +
         (1.0 - s.p * s.theta1 / (1.0 + s.theta1)) * r.wk;
}

double lsvrg_rate(double eta, double mu, double p) noexcept { return std::max(1.0 - eta * mu, 1.0 - p / 2.0); }

double lkatyusha_rate(double eta, double sigma, double theta1, double theta2, double p) noexcept {
  return std::max({1.0 / (1.0 + eta * sigma), 1.0 - theta1 * (1.0 - theta2), 1.0 - p * theta1 / (1.0 + theta1)});
}

// ---------------------------------------------------------------------------

double LemmaCheck::relative_slack() const noexcept {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return scale == 0.0 ? 0.0 : slack() / scale;
}

bool LemmaCheck::holds(double tolerance) const noexcept {
  if (equality) return std::abs(relative_slack()) <= tolerance;
  return relative_slack() >= -tolerance;
}

const LemmaCheck& LemmaReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no lemma check named '" + name + "'");
}

double LemmaReport::min_relative_slack() const noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : checks) best = std::min(best, c.equality ? -std::abs(c.relative_slack()) : c.relative_slack());
  return best;
}

bool LemmaReport::all_hold(double inequality_tol, double equality_tol) const noexcept {
  return std::all_of(checks.begin(), checks.end(), [&](const LemmaCheck& c) {
    return c.holds(c.equality ? equality_tol : inequality_tol);
  });
}

LemmaReport verify_lemma_bounds(const LsvrgState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  require_enumerable(oracle);
  require_same_space(oracle, ref, s.x);
  const double L = oracle.smoothness();
  const double mu = oracle.mu();
  const double inv_n = 1.0 / static_cast<double>(oracle.n());
  const double f_gap = gap(oracle, ref, s.x);
  const double dist_sq = (s.x - ref.x_star).squaredNorm();
  const double dk = gradient_learning(oracle, ref, s.w, s.eta, s.p);

  double g_sq = 0.0;
  double next_dist_sq = 0.0;
  for (std::size_t i = 0; i < oracle.n(); ++i) {
    const Vector g = variance_reduced_gradient(oracle, i, s.x, s.w, s.grad_w);
    g_sq += inv_n * g.squaredNorm();
    next_dist_sq += inv_n * (s.x - s.eta * g - ref.x_star).squaredNorm();
  }

  double next_dk = 0.0;
  for (const bool refresh : {true, false}) {
    const double weight = refresh ? s.p : 1.0 - s.p;
    if (weight == 0.0) continue;
    LsvrgState branch = s;
    lsvrg_apply(branch, oracle, 0, refresh);
    next_dk += weight * gradient_learning(oracle, ref, branch.w, s.eta, s.p);
  }

  LemmaReport report;
  report.checks.push_back(
      {"distance_step", next_dist_sq, (1.0 - s.eta * mu) * dist_sq - 2.0 * s.eta * f_gap + s.eta * s.eta * g_sq, false});
  report.checks.push_back({"second_moment", g_sq, 4.0 * L * f_gap + s.p / (2.0 * s.eta * s.eta) * dk, false});
  report.checks.push_back({"learning_decay", next_dk, (1.0 - s.p) * dk + 8.0 * L * s.eta * s.eta * f_gap, false});
  report.checks.push_back(
      {"phi_contraction", exact_expected_phi_next(s, ref, oracle), (1.0 - s.eta * mu) * dist_sq + (1.0 - s.p / 2.0) * dk, false});
  return report;
}

LemmaReport verify_lemma_bounds(const LkatyushaState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  require_enumerable(oracle);
  require_same_space(oracle, ref, s.y);
  const double L = s.smoothness;
  const double mu = s.sigma * L;
  const double inv_n = 1.0 / static_cast<double>(oracle.n());
  const Vector x = katyusha_interpolation(s);
  const Vector grad_x = oracle.full_grad(x);
  const double f_x = oracle.value(x);
  const double es = s.eta * s.sigma;
  const double z_now = z_term(s, ref, s.z);

  double variance = 0.0;
  LemmaCheck worst_z{"z_step", 0.0, 0.0, false};
  LemmaCheck worst_y{"y_step", 0.0, 0.0, false};
  double worst_z_slack = std::numeric_limits<double>::infinity();
  double worst_y_slack = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < oracle.n(); ++i) {
    const Vector g = variance_reduced_gradient(oracle, i, x, s.w, s.grad_w);
    variance += inv_n * (g - grad_x).squaredNorm();

    const Vector z_next = (es * x + s.z - (s.eta / L) * g) / (1.0 + es);
    const Vector y_next = x + s.theta1 * (z_next - s.z);
    const double step_sq = (z_next - s.z).squaredNorm();

    // the z-step bound states lhs >= rhs; stored flipped so that slack = stated lhs - stated rhs.
    const LemmaCheck cz{"z_step",
                        L / (2.0 * s.eta) * step_sq + z_term(s, ref, z_next) - z_now / (1.0 + es),
                        g.dot(ref.x_star - z_next) + 0.5 * mu * (x - ref.x_star).squaredNorm(), false};
    if (cz.relative_slack() < worst_z_slack) {
      worst_z_slack = cz.relative_slack();
      worst_z = cz;
    }

    const LemmaCheck cy{"y_step",
                        (oracle.value(y_next) - f_x) / s.theta1 -
                            s.theta2 / (2.0 * L * s.theta1) * (g - grad_x).squaredNorm(),
                        L / (2.0 * s.eta) * step_sq + g.dot(z_next - s.z), false};
    if (cy.relative_slack() < worst_y_slack) {
      worst_y_slack = cy.relative_slack();
      worst_y = cy;
    }
  }

  const auto psi = compute_psi(s, ref, oracle);
  double next_w = 0.0;
  for (const bool refresh : {true, false}) {
    const double weight = refresh ? s.p : 1.0 - s.p;
    if (weight == 0.0) continue;
    LkatyushaState branch = s;
    lkatyusha_apply(branch, oracle, 0, refresh);
    next_w += weight * w_weight(s) * gap(oracle, ref, branch.w);
  }

  LemmaReport report;
  report.checks.push_back(
      {"estimator_variance", variance, 2.0 * L * (oracle.value(s.w) - f_x - grad_x.dot(s.w - x)), false});
  report.checks.push_back(worst_z);
  report.checks.push_back(worst_y);
  report.checks.push_back({"w_expectation", next_w, (1.0 - s.p) * psi.wk + s.theta2 * (1.0 + s.theta1) * psi.yk, true});
  report.checks.push_back(
      {"psi_contraction", exact_expected_psi_next(s, ref, oracle), psi_contraction_bound(s, ref, oracle), false});
  return report;
}

std::optional<LemmaReport> lemma_report(const OptimizerState& state, const ReferenceSolution& ref,
                                        const Oracle& oracle) {
  if (const auto* s = std::get_if<LsvrgState>(&state)) return verify_lemma_bounds(*s, ref, oracle);
  if (const auto* s = std::get_if<LkatyushaState>(&state)) return verify_lemma_bounds(*s, ref, oracle);
  return std::nullopt;
}

}  // namespace loopless
