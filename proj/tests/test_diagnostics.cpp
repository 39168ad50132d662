#include <doctest.h>

#include <cmath>
#include <string>

#include "loopless/diagnostics.hpp"
#include "loopless/errors.hpp"
#include "test_support.hpp"

using namespace loopless;
using testing::random_vector;

namespace {

struct Instance {
  Oracle oracle;
  ReferenceSolution ref;
};

Instance ridge_instance(std::size_t n, std::size_t d, double kappa, std::uint64_t seed) {
  const auto s = synthesize_quadratic(n, d, kappa, seed);
  Oracle oracle(s.data, LossKind::ridge, s.mu);
  ReferenceSolution ref = make_reference(oracle, testing::ridge_solve(s.data, s.mu));
  return {std::move(oracle), std::move(ref)};
}

// L-SVRG state at arbitrary (x, w) with a consistent stored gradient.
LsvrgState lsvrg_at(const Oracle& oracle, const Vector& x, const Vector& w, const LsvrgParams& params) {
  auto s = lsvrg_init(oracle, w, params);
  s.x = x;
  return s;
}

LkatyushaState lkatyusha_at(const Oracle& oracle, const Vector& y, const Vector& z, const Vector& w,
                            const LkatyushaParams& params) {
  auto s = lkatyusha_init(oracle, w, params);
  s.y = y;
  s.z = z;
  return s;
}

double phi_of(const LsvrgState& s, const ReferenceSolution& ref, const Oracle& oracle) {
  return compute_phi(s, ref, oracle).phi;
}

}  // namespace

TEST_CASE("solve_reference matches the closed-form ridge solution") {
  const auto s = synthesize_quadratic(30, 5, 20.0, 1);
  const Oracle oracle(s.data, LossKind::ridge, s.mu);
  const Vector closed = testing::ridge_solve(s.data, s.mu);
  for (auto method : {ReferenceMethod::gradient_descent, ReferenceMethod::normal_equations}) {
    ReferenceOptions opts;
    opts.method = method;
    const auto ref = solve_reference(oracle, opts);
    CHECK((ref.x_star - closed).norm() <= 1e-8);
    CHECK(ref.grad_norm <= 1e-10);
    CHECK(ref.f_star == doctest::Approx(oracle.value(closed)).epsilon(1e-12));
    REQUIRE(ref.grad_i_star.size() == oracle.n());
    for (std::size_t i = 0; i < oracle.n(); ++i) CHECK(ref.grad_i_star[i] == oracle.grad_i(i, ref.x_star));
  }
}

TEST_CASE("a loose tolerance returns the starting point") {
  const auto inst = ridge_instance(10, 3, 5.0, 2);
  ReferenceOptions opts;
  opts.tolerance = 1e6;
  Vector x0(3);
  x0 << 0.5, -0.5, 1.0;
  opts.x0 = x0;
  const auto ref = solve_reference(inst.oracle, opts);
  CHECK(ref.x_star == x0);
  CHECK(ref.epochs_used <= 1.0);  // one gradient evaluation, no steps
}

TEST_CASE("reference solve failure reports the best gradient norm") {
  const auto inst = ridge_instance(10, 3, 1000.0, 3);
  ReferenceOptions opts;
  opts.max_epochs = 3;
  try {
    (void)solve_reference(inst.oracle, opts);
    FAIL("expected ReferenceSolveError");
  } catch (const ReferenceSolveError& e) {
    CHECK(e.best_grad_norm() > opts.tolerance);
    CHECK(std::isfinite(e.best_grad_norm()));
  }
  opts.tolerance = 0.0;
  CHECK_THROWS_AS(solve_reference(inst.oracle, opts), ConfigError);
  ReferenceOptions logistic_normal;
  logistic_normal.method = ReferenceMethod::normal_equations;
  const Oracle logistic(inst.oracle.dataset(), LossKind::logistic, 0.1);
  CHECK_THROWS_AS(solve_reference(logistic, logistic_normal), ConfigError);
}

TEST_CASE("logistic reference on the 50-row categorical fixture") {
  const Dataset data = load_libsvm(std::string(LOOPLESS_TEST_DATA_DIR) + "/categorical50.libsvm");
  REQUIRE(data.n() == 50);
  const Oracle oracle(data, LossKind::logistic, 1e-2);
  const auto ref = solve_reference(oracle);
  CHECK(ref.grad_norm <= 1e-10);
  CHECK(ref.epochs_used <= 1e5);
  CHECK(oracle.full_grad(ref.x_star).norm() <= 1e-10);
}

TEST_CASE("Lyapunov functions vanish at the minimiser") {
  const auto inst = ridge_instance(8, 4, 10.0, 4);
  const auto& x_star = inst.ref.x_star;
  const auto phi = compute_phi(lsvrg_init(inst.oracle, x_star, lsvrg_theory_params(inst.oracle)), inst.ref, inst.oracle);
  CHECK(phi.phi <= 1e-28);
  const auto psi =
      compute_psi(lkatyusha_init(inst.oracle, x_star, lkatyusha_theory_params(inst.oracle)), inst.ref, inst.oracle);
  CHECK(psi.psi <= 1e-20);
  CHECK(exact_expected_phi_next(lsvrg_init(inst.oracle, x_star, lsvrg_theory_params(inst.oracle)), inst.ref,
                                inst.oracle) <= 1e-28);
  CHECK(exact_expected_psi_next(lkatyusha_init(inst.oracle, x_star, lkatyusha_theory_params(inst.oracle)), inst.ref,
                                inst.oracle) <= 1e-20);
}

TEST_CASE("Lyapunov functions on a hand-set scalar ridge problem") {
  // f(x) = (1/2)(2x - 1)^2 + (1/4) x^2, curvature 4.5, x* = 4/9, grad f_1(w) = 4.5 w - 2.
  const Oracle oracle(parse_libsvm(std::string("+1 1:2\n")), LossKind::ridge, 0.5);
  Vector x_star(1);
  x_star << 4.0 / 9.0;
  const auto ref = make_reference(oracle, x_star);
  const auto gap = [&](double v) { return 2.25 * (v - 4.0 / 9.0) * (v - 4.0 / 9.0); };

  SUBCASE("phi") {
    Vector x(1), w(1);
    x << 1.0;
    w << 0.0;
    const auto r = compute_phi(lsvrg_at(oracle, x, w, {0.1, 0.5}), ref, oracle);
    const double dist = 25.0 / 81.0;
    const double dk = 4.0 * 0.01 / 0.5 * 4.0;  // (4.5 * 4/9)^2 = 4
    CHECK(r.dist_sq == doctest::Approx(dist).epsilon(1e-14));
    CHECK(r.dk == doctest::Approx(dk).epsilon(1e-14));
    CHECK(r.phi == doctest::Approx(dist + dk).epsilon(1e-14));
  }
  SUBCASE("psi") {
    Vector y(1), z(1), w(1);
    y << 0.0;
    z << 1.0;
    w << 2.0;
    const auto s = lkatyusha_at(oracle, y, z, w, {0.5, 0.5, 1.0});
    // L = 4.5, sigma = 1/9, eta = 2/3.
    const double L = 4.5, sigma = 1.0 / 9.0, eta = 2.0 / 3.0;
    const double zk = L * (1.0 + eta * sigma) / (2.0 * eta) * (25.0 / 81.0);
    const double yk = gap(0.0) / 0.5;
    const double wk = 0.5 * 1.5 / 0.5 * gap(2.0);
    const auto r = compute_psi(s, ref, oracle);
    CHECK(r.zk == doctest::Approx(zk).epsilon(1e-13));
    CHECK(r.yk == doctest::Approx(yk).epsilon(1e-13));
    CHECK(r.wk == doctest::Approx(wk).epsilon(1e-13));
    CHECK(r.psi == doctest::Approx(zk + yk + wk).epsilon(1e-13));
  }
  SUBCASE("with p = 1 and n = 1 the expectation is the single branch") {
    const auto s = lkatyusha_at(oracle, Vector::Zero(1), Vector::Ones(1), 2.0 * Vector::Ones(1), {0.5, 0.5, 1.0});
    auto next = s;
    lkatyusha_apply(next, oracle, 0, true);
    CHECK(exact_expected_psi_next(s, ref, oracle) == doctest::Approx(compute_psi(next, ref, oracle).psi).epsilon(1e-14));
  }
}

TEST_CASE("contraction bounds hold at random states on n = 5") {
  const auto inst = ridge_instance(5, 3, 30.0, 5);
  Rng rng(50);
  const auto lp = lsvrg_theory_params(inst.oracle);
  const auto kp = lkatyusha_theory_params(inst.oracle);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector a = inst.ref.x_star + random_vector(rng, 3, 2.0);
    const Vector b = inst.ref.x_star + random_vector(rng, 3, 2.0);
    const Vector c = inst.ref.x_star + random_vector(rng, 3, 2.0);
    const auto s = lsvrg_at(inst.oracle, a, b, lp);
    const auto phi = compute_phi(s, inst.ref, inst.oracle);
    CHECK(phi.phi >= phi.dist_sq);
    CHECK(exact_expected_phi_next(s, inst.ref, inst.oracle) <= phi_contraction_bound(s, inst.ref, inst.oracle) + 1e-12);

    const auto k = lkatyusha_at(inst.oracle, a, b, c, kp);
    const auto psi = compute_psi(k, inst.ref, inst.oracle);
    CHECK(psi.zk >= 0.0);
    CHECK(psi.yk >= 0.0);
    CHECK(psi.wk >= 0.0);
    CHECK(exact_expected_psi_next(k, inst.ref, inst.oracle) <= psi_contraction_bound(k, inst.ref, inst.oracle) + 1e-12);
  }
}

TEST_CASE("exact expectation agrees with Monte Carlo sampling") {
  const auto inst = ridge_instance(5, 3, 30.0, 6);
  Rng rng(60);
  const auto s = lsvrg_at(inst.oracle, inst.ref.x_star + random_vector(rng, 3, 1.0),
                          inst.ref.x_star + random_vector(rng, 3, 1.0), {1.0 / (6.0 * inst.oracle.smoothness()), 0.3});
  const double exact = exact_expected_phi_next(s, inst.ref, inst.oracle);
  const int samples = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < samples; ++k) {
    auto next = s;
    lsvrg_step(next, inst.oracle, rng);
    const double v = phi_of(next, inst.ref, inst.oracle);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / samples;
  const double se = std::sqrt((sum_sq / samples - mean * mean) / samples);
  CHECK(std::abs(mean - exact) <= 3.0 * se);
}

TEST_CASE("lemma reports on random states") {
  const auto inst = ridge_instance(5, 3, 30.0, 7);
  Rng rng(70);
  const auto lp = lsvrg_theory_params(inst.oracle);
  const auto kp = lkatyusha_theory_params(inst.oracle);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector a = inst.ref.x_star + random_vector(rng, 3, 2.0);
    const Vector b = inst.ref.x_star + random_vector(rng, 3, 2.0);
    const Vector c = inst.ref.x_star + random_vector(rng, 3, 2.0);
    const auto svrg = verify_lemma_bounds(lsvrg_at(inst.oracle, a, b, lp), inst.ref, inst.oracle);
    CHECK(svrg.checks.size() == 4);
    CHECK(svrg.find("distance_step").slack() >= 0.0);
    CHECK(svrg.all_hold());
    const auto kat = verify_lemma_bounds(lkatyusha_at(inst.oracle, a, b, c, kp), inst.ref, inst.oracle);
    CHECK(kat.checks.size() == 5);
    CHECK(kat.find("w_expectation").equality);
    CHECK(std::abs(kat.find("w_expectation").relative_slack()) <= 1e-12);
    CHECK(kat.all_hold());
  }
}

TEST_CASE("second-moment bound is zero on both sides at the minimiser") {
  const auto inst = ridge_instance(5, 3, 30.0, 8);
  const auto s = lsvrg_init(inst.oracle, inst.ref.x_star, lsvrg_theory_params(inst.oracle));
  const auto r = verify_lemma_bounds(s, inst.ref, inst.oracle);
  CHECK(std::abs(r.find("second_moment").lhs) <= 1e-28);
  CHECK(std::abs(r.find("second_moment").rhs) <= 1e-28);
  CHECK_THROWS_AS((void)r.find("no_such_check"), std::out_of_range);
}

TEST_CASE("lemma check arithmetic") {
  LemmaCheck ineq{"x", 1.0, 2.0, false};
  CHECK(ineq.slack() == 1.0);
  CHECK(ineq.relative_slack() == 0.5);
  CHECK(ineq.holds(0.0));
  LemmaCheck broken{"y", 2.0, 1.0, false};
  CHECK_FALSE(broken.holds(1e-10));
  LemmaCheck zero{"z", 0.0, 0.0, true};
  CHECK(zero.relative_slack() == 0.0);
  CHECK(zero.holds(0.0));
  LemmaReport report{{ineq, broken}};
  CHECK(report.min_relative_slack() == -0.5);
  CHECK_FALSE(report.all_hold());
}

TEST_CASE("contraction holds along a real run and strong convexity bounds the distance") {
  const auto inst = ridge_instance(10, 4, 50.0, 9);
  const Vector x0 = Vector::Zero(4);
  auto svrg = lsvrg_init(inst.oracle, x0, lsvrg_theory_params(inst.oracle));
  auto kat = lkatyusha_init(inst.oracle, x0, lkatyusha_theory_params(inst.oracle));
  Rng rng(90);
  const double mu = inst.oracle.mu();
  for (int k = 0; k < 200; ++k) {
    REQUIRE(exact_expected_phi_next(svrg, inst.ref, inst.oracle) <=
            phi_contraction_bound(svrg, inst.ref, inst.oracle) + 1e-10);
    REQUIRE(exact_expected_psi_next(kat, inst.ref, inst.oracle) <=
            psi_contraction_bound(kat, inst.ref, inst.oracle) + 1e-10);
    const auto psi = compute_psi(kat, inst.ref, inst.oracle);
    REQUIRE((kat.y - inst.ref.x_star).squaredNorm() <= 2.0 * kat.theta1 * psi.yk / mu * (1.0 + 1e-10) + 1e-30);
    lsvrg_step(svrg, inst.oracle, rng);
    lkatyusha_step(kat, inst.oracle, rng);
  }
}

TEST_CASE("enumeration guard") {
  Rng rng(100);
  const Oracle big(testing::random_dataset(rng, kEnumerationLimit + 1, 2, 0.5), LossKind::ridge, 0.1);
  const auto ref = make_reference(big, Vector::Zero(2));
  const auto s = lsvrg_init(big, Vector::Zero(2), lsvrg_theory_params(big));
  CHECK_THROWS_AS((void)exact_expected_phi_next(s, ref, big), ConfigError);
  CHECK_THROWS_AS((void)verify_lemma_bounds(s, ref, big), ConfigError);
  const auto k = lkatyusha_init(big, Vector::Zero(2), lkatyusha_theory_params(big));
  CHECK_THROWS_AS((void)exact_expected_psi_next(k, ref, big), ConfigError);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto inst = ridge_instance(5, 3, 10.0, 11);
  const auto other = ridge_instance(5, 4, 10.0, 11);
  const auto s = lsvrg_init(other.oracle, Vector::Zero(4), lsvrg_theory_params(other.oracle));
  CHECK_THROWS_AS((void)compute_phi(s, inst.ref, other.oracle), DimensionError);
  CHECK_THROWS_AS(make_reference(inst.oracle, Vector::Zero(2)), DimensionError);
}

TEST_CASE("lyapunov_report and lemma_report dispatch on the state kind") {
  const auto inst = ridge_instance(6, 3, 10.0, 12);
  const Vector x0 = Vector::Ones(3);
  for (auto alg : {Algorithm::gd, Algorithm::svrg, Algorithm::lsvrg, Algorithm::katyusha, Algorithm::lkatyusha}) {
    CAPTURE(to_string(alg));
    const auto state = make_state(resolve_params(alg, inst.oracle, {}), inst.oracle, x0);
    const auto lyap = lyapunov_report(state, inst.ref, inst.oracle);
    const auto lemmas = lemma_report(state, inst.ref, inst.oracle);
    if (alg == Algorithm::gd) {
      CHECK_FALSE(lyap.has_value());
    } else if (alg == Algorithm::svrg || alg == Algorithm::lsvrg) {
      REQUIRE(lyap.has_value());
      CHECK(*lyap->phi == doctest::Approx(*lyap->dist_sq + *lyap->dk));
      CHECK_FALSE(lyap->psi.has_value());
    } else {
      REQUIRE(lyap.has_value());
      CHECK(*lyap->psi == doctest::Approx(*lyap->zk + *lyap->yk + *lyap->wk));
    }
    CHECK(lemmas.has_value() == (alg == Algorithm::lsvrg || alg == Algorithm::lkatyusha));
  }
}

TEST_CASE("variance decomposition identity over the sample index") {
  Rng rng(120);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = ridge_instance(6, 3, 10.0, 200 + static_cast<std::uint64_t>(trial));
    const Vector x = random_vector(rng, 3, 2.0), w = random_vector(rng, 3, 2.0), y = random_vector(rng, 3, 2.0);
    const double n = static_cast<double>(inst.oracle.n());
    Vector mean = Vector::Zero(3);
    for (std::size_t i = 0; i < inst.oracle.n(); ++i) mean += (inst.oracle.grad_i(i, x) - inst.oracle.grad_i(i, w)) / n;
    double var = 0.0, around_y = 0.0;
    for (std::size_t i = 0; i < inst.oracle.n(); ++i) {
      const Vector v = inst.oracle.grad_i(i, x) - inst.oracle.grad_i(i, w);
      var += (v - mean).squaredNorm() / n;
      around_y += (v - y).squaredNorm() / n;
    }
    const double rhs = around_y - (mean - y).squaredNorm();
    CHECK(std::abs(var - rhs) <= 1e-12 * std::max(around_y, 1e-300));
  }
}

TEST_CASE("rate formulas") {
  CHECK(lsvrg_rate(0.1, 1.0, 0.5) == doctest::Approx(0.9));
  CHECK(lsvrg_rate(0.1, 1.0, 0.1) == doctest::Approx(0.95));
  // theta1 = theta2 = 1/2, eta = 2/3, sigma = 3/4: terms 2/3, 3/4, 1 - p/3.
  CHECK(lkatyusha_rate(2.0 / 3.0, 0.75, 0.5, 0.5, 0.5) == doctest::Approx(5.0 / 6.0));
  CHECK(lkatyusha_rate(2.0 / 3.0, 0.75, 0.5, 0.5, 1.0) == doctest::Approx(0.75));
}
