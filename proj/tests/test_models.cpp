#include <doctest.h>

#include <cmath>
#include <random>

#include "lagrange/error.hpp"
#include "lagrange/models.hpp"

using namespace lagrange;

namespace {

double half_sq_loss(const Model& m, std::span<const double> params, std::span<const double> u,
                    std::span<const double> target) {
  const auto f = m.forward_at(params, u);
  double s = 0.0;
  for (std::size_t o = 0; o < f.size(); ++o) s += (f[o] - target[o]) * (f[o] - target[o]);
  return 0.5 * s;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("linear forward and gradients") {
    const double y0[] = {2.0}, b0[] = {-1.0};
    const LinearUnit m(2, y0, b0);
    const double u = 0.5;
    CHECK(m.forward(std::span(&u, 1))[0] == 0.0);
    CHECK(LinearUnit(2).forward(std::span(&u, 1))[0] == 0.0);

    const double u1 = 1.0, target = 1.0;
    const Gradients g0 = m.gradients(std::span(&u1, 1), std::span(&target, 1));
    CHECK(g0.zeta[0] == 0.0);
    CHECK(g0.zeta[1] == 0.0);

    const double y1[] = {1.0}, b1[] = {0.0};
    const LinearUnit n(2, y1, b1);
    const double t0 = 0.0;
    const Gradients g = n.gradients(std::span(&u, 1), std::span(&t0, 1));
    CHECK(g.zeta[0] == 0.25);
    CHECK(g.zeta[1] == 0.5);
    CHECK(n.parameter_names() == std::vector<std::string>{"y", "b"});
  }

  TEST_CASE("dimension checks") {
    const LinearUnit m(2);
    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(m.forward(two), InvalidArgument);
    const Mlp net(3, 4, 2, 2, 0);
    CHECK_THROWS_AS(net.forward(two), InvalidArgument);
    const std::vector<double> u3{1, 2, 3}, t1{1};
    CHECK_THROWS_AS(net.gradients(u3, t1), InvalidArgument);
    const double too_many[] = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(LinearUnit(2, too_many, {}), InvalidArgument);
  }

  TEST_CASE("zero network outputs zero") {
    const std::vector<double> zeros(Mlp::parameter_count_for(2, 5, 2), 0.0);
    const Mlp net(2, 5, 2, 4, zeros);
    const std::vector<double> u{0.3, -0.7};
    for (double v : net.forward(u)) CHECK(v == 0.0);
  }

  TEST_CASE("seeded initialization") {
    const Mlp a(2, 20, 2, 4, 42), b(2, 20, 2, 4, 42), c(2, 20, 2, 4, 43);
    CHECK(a.parameters() == b.parameters());
    CHECK(a.parameters() != c.parameters());
    for (double w : a.parameters()) {
      CHECK(w >= -0.5);
      CHECK(w < 0.5);
    }
    CHECK(a.parameter_count() == 20 * 2 + 20 + 2 * 20 + 2);
    CHECK(a.parameter_names().front() == "W1[0][0]");
    CHECK(a.parameter_names().back() == "b2[1]");
    for (const auto& s : a.states()) {
      for (int i = 1; i < s.dimension(); ++i) CHECK(s.vector()(i) == 0.0);
    }
  }

  TEST_CASE("reverse-mode gradients match central differences") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    for (int draw = 0; draw < 100; ++draw) {
      const std::size_t in = 1 + rng() % 3, hid = 1 + rng() % 8, out = 1 + rng() % 3;
      std::vector<double> w(Mlp::parameter_count_for(in, hid, out));
      for (auto& x : w) x = u(rng);
      const Mlp net(in, hid, out, 2, w);
      std::vector<double> x(in), target(out);
      for (auto& v : x) v = u(rng);
      for (auto& v : target) v = u(rng);
      bool near_kink = false;
      for (double z : net.preactivations(w, x)) near_kink = near_kink || std::abs(z) <= 1e-3;
      if (near_kink) continue;
      ++checked;
      const Gradients g = net.gradients(x, target);
      const double h = 1e-6;
      for (std::size_t p = 0; p < w.size(); ++p) {
        std::vector<double> plus = w, minus = w;
        plus[p] += h;
        minus[p] -= h;
        const double fd = (half_sq_loss(net, plus, x, target) - half_sq_loss(net, minus, x, target)) / (2 * h);
        CHECK(std::abs(fd - g.zeta[p]) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
    CHECK(checked > 50);
  }

  TEST_CASE("rectifier derivative is zero at exactly zero") {
    // W1 = 0, b1 = 0: every preactivation is exactly 0.
    std::vector<double> w(Mlp::parameter_count_for(1, 2, 1), 0.0);
    w[4] = 1.0;  // W2[0][0]
    const Mlp net(1, 2, 1, 2, w);
    const double x = 0.5, target = 1.0;
    const Gradients g = net.gradients(std::span(&x, 1), std::span(&target, 1));
    CHECK(g.zeta[0] == 0.0);
    CHECK(g.zeta[2] == 0.0);
  }

  TEST_CASE("advancing a model equals advancing each weight with its own gradient") {
    const DynamicsEngine e(MonicPoly({0.0225, 0.3, 1.4, 2.0}), 0.01, -2.0);
    Mlp net(2, 3, 2, 4, 5);
    std::vector<WeightState> manual = net.states();
    const std::vector<double> x{0.2, -0.4}, target{1.0, 0.0};
    for (int k = 0; k < 50; ++k) {
      const bool supervised = k % 3 != 2;
      if (supervised) {
        std::vector<double> params;
        for (const auto& s : manual) params.push_back(s.value());
        const Gradients g = net.gradients_at(params, x, target);
        for (std::size_t i = 0; i < manual.size(); ++i) e.advance(manual[i], g.zeta[i]);
        net.advance(e, x, std::span<const double>(target));
      } else {
        for (auto& s : manual) e.advance(s, std::nullopt);
        net.advance(e, x, std::nullopt);
      }
    }
    for (std::size_t i = 0; i < manual.size(); ++i) CHECK(net.states()[i].vector() == manual[i].vector());
  }

  TEST_CASE("supervision at the current output adds nothing") {
    const DynamicsEngine e(MonicPoly({4, 5}), 0.01, -1.0);
    const double y0[] = {1.5, 0.2}, b0[] = {-0.5, 0.1};
    LinearUnit supervised(2, y0, b0), free(2, y0, b0);
    const double u = 0.3;
    const double target = supervised.forward(std::span(&u, 1))[0];
    supervised.advance(e, std::span(&u, 1), std::span<const double>(&target, 1));
    free.tick(e);
    CHECK(supervised.states()[0].vector() == free.states()[0].vector());
    CHECK(supervised.states()[1].vector() == free.states()[1].vector());
  }

  TEST_CASE("unsupervised advance is linear in the state") {
    const DynamicsEngine e(MonicPoly({4, 5}), 0.01, -1.0);
    LinearUnit zero(2);
    zero.tick(e);
    CHECK(zero.parameters() == std::vector<double>{0.0, 0.0});

    const double y0[] = {1.0, -0.5}, b0[] = {0.25, 2.0};
    const double y3[] = {3.0, -1.5}, b3[] = {0.75, 6.0};
    LinearUnit a(2, y0, b0), c(2, y3, b3);
    for (int k = 0; k < 100; ++k) {
      a.tick(e);
      c.tick(e);
    }
    CHECK(c.parameters()[0] == doctest::Approx(3.0 * a.parameters()[0]).epsilon(1e-14));
    CHECK(c.parameters()[1] == doctest::Approx(3.0 * a.parameters()[1]).epsilon(1e-14));
  }

  TEST_CASE("mid-step gradients use the propagated weights") {
    const DynamicsEngine e(MonicPoly({4, 5}), 0.1, -1.0);
    const double y0[] = {1.0, 3.0}, b0[] = {0.0, 0.0};
    LinearUnit start(2, y0, b0), mid(2, y0, b0);
    const double u = 1.0, target = 0.0;
    start.advance(e, std::span(&u, 1), std::span<const double>(&target, 1), GradientPoint::StepStart);
    mid.advance(e, std::span(&u, 1), std::span<const double>(&target, 1), GradientPoint::MidStep);
    CHECK(start.parameters()[0] != mid.parameters()[0]);
  }
}
