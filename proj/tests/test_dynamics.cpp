#include <doctest.h>

#include <cmath>
#include <random>

#include "lagrange/dynamics.hpp"
#include "lagrange/error.hpp"
#include "support.hpp"

using namespace lagrange;

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Steps an engine through a random impulse train and compares with the closed form.
double oracle_gap(const RootSet& roots, std::uint64_t seed, int steps, double tau) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MonicPoly poly = characteristic_poly(roots);
  const double kappa = 0.7;
  const DynamicsEngine engine(poly, tau, kappa, 1e300);

  const int n = poly.degree();
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0(i) = u(rng);
  WeightState state(x0);

  std::vector<Impulse> impulses;
  std::vector<double> stepped{state.value()};
  for (int k = 0; k < steps; ++k) {
    std::optional<double> zeta;
    if (u(rng) > 0.0) {
      zeta = u(rng);
      impulses.push_back({(k + 0.5) * tau, kappa * *zeta});
    }
    engine.advance(state, zeta);
    stepped.push_back(state.value());
  }
  const std::vector<double> ic(x0.data(), x0.data() + n);
  const ClosedFormResponse oracle(roots, ic, impulses);
  double scale = 0.0, gap = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double expected = oracle(k * tau);
    scale = std::max(scale, std::abs(expected));
    gap = std::max(gap, std::abs(expected - stepped[k]));
  }
  return gap / scale;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("matrix exponential matches an independent implementation") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
      const int n = 1 + static_cast<int>(rng() % 6);
      const double scale = std::pow(10.0, static_cast<double>(rng() % 4) - 2.0);
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < m.size(); ++i) m.data()[i] = scale * nd(rng);
      const Eigen::MatrixXd ours = matrix_exponential(m);
      const Eigen::MatrixXd ref = testing::expm_oracle(m);
      CHECK(max_abs_diff(ours, ref) <= 1e-11 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
    CHECK(max_abs_diff(matrix_exponential(Eigen::MatrixXd::Zero(3, 3)), Eigen::MatrixXd::Identity(3, 3)) < 1e-15);
    CHECK_THROWS_AS(matrix_exponential(Eigen::MatrixXd::Zero(2, 3)), InvalidArgument);
  }

  TEST_CASE("matrix exponential agrees with eigendecomposition for distinct roots") {
    const RootSet r({{Complex(-0.3, 2.0), 1}, {Complex(-0.3, -2.0), 1}, {Complex(-1.5, 0), 1}});
    const MonicPoly p = characteristic_poly(r);
    const CompanionSystem sys(p);
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a);
    const Eigen::MatrixXcd v = es.eigenvectors();
    for (double t : {0.01, 0.5, 3.0}) {
      const Eigen::VectorXcd d = (es.eigenvalues() * t).array().exp();
      const Eigen::MatrixXd ref = (v * d.asDiagonal() * v.inverse()).real();
      CHECK(max_abs_diff(matrix_exponential(sys.a * t), ref) < 1e-11);
    }
  }

  TEST_CASE("semigroup property") {
    const DynamicsEngine e(MonicPoly({9, 24, 22, 8}), 0.05, 1.0);
    const Eigen::MatrixXd twice = matrix_exponential(e.system().a * 0.1);
    CHECK(max_abs_diff(twice, e.transition() * e.transition()) < 1e-10);
    CHECK(max_abs_diff(e.transition(), e.half_transition() * e.half_transition()) < 1e-12);
  }

  TEST_CASE("companion realization") {
    const CompanionSystem sys(MonicPoly({4, 5}));
    CHECK(sys.a(0, 1) == 1.0);
    CHECK(sys.a(1, 0) == -4.0);
    CHECK(sys.a(1, 1) == -5.0);
    CHECK(sys.b(0) == 0.0);
    CHECK(sys.b(1) == -1.0);
  }

  TEST_CASE("gain signs") {
    OperatorParams first;
    first.theta = 5;
    CHECK(signed_gain(first) == -1.0);  // γ = -1, μ = α1 = 1
    first.gamma = 1;
    first.mu = 0.5;
    first.alphas = {1, 2};
    CHECK(signed_gain(first) == doctest::Approx(1.0 / (0.5 * 4)));

    OperatorParams second;
    second.order = 2;
    second.theta = 4;
    second.alphas = {0.8, 1.6, 0.8};
    second.gamma = -1;
    CHECK(signed_gain(second) == doctest::Approx(1.0 / 0.64));
    CHECK(signed_gain_from_eta(1, 1e-4) == 1e-4);
    CHECK(signed_gain_from_eta(2, 1e-4) == -1e-4);
    CHECK_THROWS_AS(signed_gain_from_eta(3, 1.0), InvalidArgument);
  }

  TEST_CASE("single impulse produces a lagged impulse response") {
    const RootSet roots({{-1.0, 1}, {-4.0, 1}});
    const double tau = 0.01, kappa = -0.8, zeta = 1.7;
    const DynamicsEngine e(characteristic_poly(roots), tau, kappa);
    const ImpulseResponse g(roots);
    WeightState s(2);
    e.advance(s, zeta);  // impulse at τ/2
    for (int k = 1; k <= 300; ++k) {
      CHECK(s.value() == doctest::Approx(kappa * zeta * g(k * tau - tau / 2)).epsilon(1e-10));
      e.advance(s, std::nullopt);
    }
  }

  TEST_CASE("stepped trajectory equals the closed form") {
    testing::RandomRoots gen(41);
    for (int trial = 0; trial < 20; ++trial) {
      const int degree = trial % 2 == 0 ? 2 : 4;
      const RootSet r = gen.stable(degree, 1);
      CHECK(oracle_gap(r, 100 + trial, 1000, 0.01) < 1e-8);
    }
    // unstable but slowly growing
    const RootSet unstable({{Complex(0.2, 1.5), 1}, {Complex(0.2, -1.5), 1}, {-0.7, 1}});
    CHECK(oracle_gap(unstable, 7, 1000, 0.01) < 1e-8);
    // repeated roots need no special handling in the engine
    CHECK(oracle_gap(RootSet({{-1.0, 2}, {-3.0, 2}}), 8, 1000, 0.01) < 1e-8);
  }

  TEST_CASE("mid-step value is the free response half a step ahead") {
    const RootSet r({{-0.5, 1}, {-2.0, 1}});
    const DynamicsEngine e(characteristic_poly(r), 0.1, 1.0);
    const std::vector<double> ic{0.4, -1.2};
    WeightState s(Eigen::Vector2d(ic[0], ic[1]));
    const CoefficientSet k = homogeneous_coefficients(r, ic);
    CHECK(e.mid_step_value(s) == doctest::Approx(homogeneous_eval(k, r, 0.05)).epsilon(1e-13));
  }

  TEST_CASE("free decay of a stable system") {
    const MonicPoly p({9, 24, 22, 8});
    REQUIRE(routh_hurwitz(p).stable);
    const RootSet r = poly_roots(p);
    const double tau = 0.05;
    const DynamicsEngine e(p, tau, 1.0);
    WeightState s(Eigen::Vector4d(1.0, -2.0, 0.5, 3.0));
    const double norm0 = s.vector().norm();
    const int steps = static_cast<int>(std::ceil(40.0 / r.min_abs_real_part() / tau));
    for (int k = 0; k < steps; ++k) e.advance(s, std::nullopt);
    CHECK(s.vector().norm() < 1e-6 * norm0);
  }

  TEST_CASE("forced response is linear in the gradient") {
    const DynamicsEngine e(MonicPoly({1.01, 0.2}), 0.02, 0.9);
    WeightState a(2), b(2), ab(2), scaled(2);
    for (int k = 0; k < 200; ++k) {
      const double za = std::sin(0.1 * k), zb = std::cos(0.03 * k);
      e.advance(a, za);
      e.advance(b, zb);
      e.advance(ab, za + zb);
      e.advance(scaled, 3.0 * za);
    }
    CHECK(ab.value() == doctest::Approx(a.value() + b.value()).epsilon(1e-12));
    CHECK(scaled.value() == doctest::Approx(3.0 * a.value()).epsilon(1e-12));
  }

  TEST_CASE("divergence flag freezes the state") {
    const DynamicsEngine e(MonicPoly({-1.0, 0.0}), 0.5, 1.0, 100.0);  // root at +1
    WeightState s(Eigen::Vector2d(1.0, 1.0));
    int steps = 0;
    while (!s.divergent() && steps < 100) {
      e.advance(s, std::nullopt);
      ++steps;
    }
    REQUIRE(s.divergent());
    const double frozen = s.value();
    CHECK(std::isfinite(frozen));
    e.advance(s, 5.0);
    CHECK(s.value() == frozen);
    CHECK(weight_value(s) == frozen);
  }

  TEST_CASE("engine argument checks") {
    CHECK_THROWS_AS(DynamicsEngine(MonicPoly({1, 2}), 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(DynamicsEngine(MonicPoly({1, 2}), 0.1, NAN), InvalidArgument);
    const DynamicsEngine e(MonicPoly({1, 2}), 0.1, 1.0);
    WeightState wrong(3);
    CHECK_THROWS_AS(e.advance(wrong, 1.0), InvalidArgument);
    CHECK_THROWS_AS(WeightState(0), InvalidArgument);
  }
}
