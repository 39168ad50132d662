#ifndef LOOPLESS_DIAGNOSTICS_HPP
#define LOOPLESS_DIAGNOSTICS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopless/optimizers.hpp"
#include "loopless/runner.hpp"

namespace loopless {

/// High-accuracy minimiser with the per-sample gradients at it frozen once.
struct ReferenceSolution {
  Vector x_star;
  double f_star = 0.0;
  std::vector<Vector> grad_i_star;
  double grad_norm = 0.0;
  double epochs_used = 0.0;
};

/// Thrown when the reference solve exhausts its budget.
class ReferenceSolveError : public std::runtime_error {
 public:
  ReferenceSolveError(const std::string& what, double best_grad_norm)
      : std::runtime_error(what), best_grad_norm_(best_grad_norm) {}
  double best_grad_norm() const noexcept { return best_grad_norm_; }

 private:
  double best_grad_norm_;
};

enum class ReferenceMethod {
  gradient_descent,  // x <- x - (1/L) grad f(x) until ||grad f|| <= tolerance
  normal_equations,  // ridge only: dense solve of ((1/n)A^T A + mu I) x = (1/n)A^T b
};

struct ReferenceOptions {
  double tolerance = 1e-10;
  double max_epochs = 1e5;
  ReferenceMethod method = ReferenceMethod::gradient_descent;
  std::optional<Vector> x0;  // defaults to the origin
};

ReferenceSolution solve_reference(const Oracle& oracle, const ReferenceOptions& options = {});

/// Freezes a known minimiser (for example a closed-form ridge solution).
ReferenceSolution make_reference(const Oracle& oracle, Vector x_star);

// ---------------------------------------------------------------------------
// Lyapunov functions

struct PhiReport {
  double phi = 0.0;
  double dist_sq = 0.0;
  double dk = 0.0;
};

struct PsiReport {
  double psi = 0.0;
  double zk = 0.0;
  double yk = 0.0;
  double wk = 0.0;
};

/// D^k = (4 eta^2 / (p n)) sum_i ||grad f_i(w) - grad f_i(x*)||^2.
double gradient_learning(const Oracle& oracle, const ReferenceSolution& ref, const Vector& w, double eta, double p);

/// Phi^k = ||x - x*||^2 + D^k.
PhiReport compute_phi(const LsvrgState& state, const ReferenceSolution& ref, const Oracle& oracle);

/// Psi^k = Z + Y + W with Z = L(1 + eta sigma)/(2 eta) ||z - x*||^2,
/// Y = (f(y) - f*)/theta1, W = theta2 (1 + theta1)/(p theta1) (f(w) - f*).
PsiReport compute_psi(const LkatyushaState& state, const ReferenceSolution& ref, const Oracle& oracle);

/// Checkpoint summary for any optimizer state (nullopt for gradient descent).
std::optional<LyapunovReport> lyapunov_report(const OptimizerState& state, const ReferenceSolution& ref,
                                              const Oracle& oracle);

// ---------------------------------------------------------------------------
// Exact one-step expectations over all 2n (sample, coin) branches

inline constexpr std::size_t kEnumerationLimit = 1000;

double exact_expected_phi_next(const LsvrgState& state, const ReferenceSolution& ref, const Oracle& oracle);
double exact_expected_psi_next(const LkatyushaState& state, const ReferenceSolution& ref, const Oracle& oracle);

/// Right-hand side of the one-step contraction bound for Phi:
/// (1 - eta mu) ||x - x*||^2 + (1 - p/2) D^k.
double phi_contraction_bound(const LsvrgState& state, const ReferenceSolution& ref, const Oracle& oracle);

/// Right-hand side of the one-step contraction bound for Psi:
/// Z/(1 + eta sigma) + (1 - theta1(1 - theta2)) Y + (1 - p theta1/(1 + theta1)) W.
double psi_contraction_bound(const LkatyushaState& state, const ReferenceSolution& ref, const Oracle& oracle);

/// Per-iteration contraction factors implied by the bounds above.
double lsvrg_rate(double eta, double mu, double p) noexcept;
double lkatyusha_rate(double eta, double sigma, double theta1, double theta2, double p) noexcept;

// ---------------------------------------------------------------------------
// Lemma slack reports

struct LemmaCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool equality = false;

  /// rhs - lhs (for inequalities lhs <= rhs).
  double slack() const noexcept { return rhs - lhs; }
  /// Slack divided by max(|lhs|, |rhs|); 0 when both sides are 0.
  double relative_slack() const noexcept;
  /// Inequalities: relative slack >= -tolerance. Equalities: |relative slack| <= tolerance.
  bool holds(double tolerance) const noexcept;
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;

  const LemmaCheck& find(const std::string& name) const;
  double min_relative_slack() const noexcept;
  bool all_hold(double inequality_tol = 1e-10, double equality_tol = 1e-12) const noexcept;
};

/// Checks, by exact enumeration over i (and the coin), for an L-SVRG state:
///   distance_step       E||x+ - x*||^2 <= (1 - eta mu)||x - x*||^2 - 2 eta (f(x) - f*) + eta^2 E||g||^2
///   second_moment       E||g||^2 <= 4L (f(x) - f*) + p/(2 eta^2) D
///   learning_decay      E D+ <= (1 - p) D + 8 L eta^2 (f(x) - f*)
///   phi_contraction     E Phi+ <= (1 - eta mu)||x - x*||^2 + (1 - p/2) D
LemmaReport verify_lemma_bounds(const LsvrgState& state, const ReferenceSolution& ref, const Oracle& oracle);

/// For an L-Katyusha state:
///   estimator_variance  E||g - grad f(x)||^2 <= 2L (f(w) - f(x) - <grad f(x), w - x>)
///   z_step              <g, x* - z+> + (mu/2)||x - x*||^2 >= L/(2 eta)||z - z+||^2 + Z+ - Z/(1 + eta sigma)
///                       (worst branch over i)
///   y_step              (f(y+) - f(x))/theta1 - theta2/(2 L theta1)||g - grad f(x)||^2
///                       <= L/(2 eta)||z+ - z||^2 + <g, z+ - z>   (worst branch over i)
///   w_expectation       E W+ = (1 - p) W + theta2 (1 + theta1) Y   (equality)
///   psi_contraction     E Psi+ <= psi_contraction_bound
LemmaReport verify_lemma_bounds(const LkatyushaState& state, const ReferenceSolution& ref, const Oracle& oracle);

/// Lemma report for any state with a loopless or loopy shape; nullopt for gd.
std::optional<LemmaReport> lemma_report(const OptimizerState& state, const ReferenceSolution& ref,
                                        const Oracle& oracle);

}  // namespace loopless

#endif
