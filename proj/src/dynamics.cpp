#include "lagrange/dynamics.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <string>

#include "lagrange/error.hpp"

namespace lagrange {

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("matrix_exponential: matrix must be square");
  if (!m.allFinite()) throw InvalidArgument("matrix_exponential: non-finite entries");
  const Eigen::Index n = m.rows();
  if (n == 0) return m;

  // Higham (2005) degree-13 coefficients and scaling threshold.
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  constexpr double kTheta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  if (squarings > 1000) throw NumericFailure("matrix_exponential: norm too large");
  const Eigen::MatrixXd a = m / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  const Eigen::MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  const Eigen::MatrixXd v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  if (!r.allFinite()) throw NumericFailure("matrix_exponential: overflow");
  return r;
}

CompanionSystem::CompanionSystem(const MonicPoly& poly) {
  const int n = poly.degree();
  a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
  for (int q = 0; q < n; ++q) a(n - 1, q) = -poly[q];
  b = Eigen::VectorXd::Zero(n);
  b(n - 1) = -1.0;
}

double signed_gain(const OperatorParams& params) {
  params.validate();
  const double lead = params.alphas.back();
  const double g = params.gamma / (params.mu * lead * lead);
  return params.order == 1 ? g : -g;
}

double signed_gain_from_eta(int order, double eta) {
  if (order != 1 && order != 2) throw InvalidArgument("operator order must be 1 or 2");
  return order == 1 ? eta : -eta;
}

DynamicsEngine::DynamicsEngine(const MonicPoly& poly, double tau, double kappa, double divergence_threshold)
    : poly_(poly),
      system_(poly),
      tau_(tau),
      kappa_(kappa),
      divergence_threshold_(divergence_threshold) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("DynamicsEngine: tau must be > 0");
  if (!std::isfinite(kappa)) throw InvalidArgument("DynamicsEngine: kappa must be finite");
  if (!(divergence_threshold > 0.0)) throw InvalidArgument("DynamicsEngine: divergence threshold must be > 0");
  if (poly.degree() > kMaxStateDimension) throw InvalidArgument("DynamicsEngine: ODE order too large");
  transition_ = matrix_exponential(system_.a * tau);
  half_transition_ = matrix_exponential(system_.a * (0.5 * tau));
  half_input_ = half_transition_ * system_.b;
}

WeightState::WeightState(int dimension) {
  if (dimension < 1 || dimension > kMaxStateDimension) {
    throw InvalidArgument("WeightState: dimension must be in [1, " + std::to_string(kMaxStateDimension) + "]");
  }
  x_ = StateVector::Zero(dimension);
}

WeightState::WeightState(const Eigen::VectorXd& x) : WeightState(static_cast<int>(x.size())) {
  if (!x.allFinite()) throw InvalidArgument("WeightState: non-finite initial state");
  for (Eigen::Index i = 0; i < x.size(); ++i) x_(i) = x(i);
}

void DynamicsEngine::advance(WeightState& state, std::optional<double> zeta) const {
  const int n = dimension();
  if (state.dimension() != n) {
    throw InvalidArgument("DynamicsEngine::step: state dimension mismatch");
  }
  if (state.divergent_) return;
  // Companion forcing u = -κζ, so that the weight picks up +κζ g(t - h).
  const double forcing = zeta ? -kappa_ * *zeta : 0.0;
  StateVector next(n);
  bool finite = true;
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += transition_(i, j) * state.x_(j);
    if (zeta) acc += half_input_(i) * forcing;
    finite = finite && std::isfinite(acc);
    peak = std::max(peak, std::abs(acc));
    next(i) = acc;
  }
  if (!finite) {
    state.divergent_ = true;
    return;
  }
  state.x_ = next;
  if (peak > divergence_threshold_) state.divergent_ = true;
}

WeightState DynamicsEngine::step(const WeightState& state, std::optional<double> zeta) const {
  WeightState next = state;
  advance(next, zeta);
  return next;
}

double DynamicsEngine::mid_step_value(const WeightState& state) const {
  return half_transition_.row(0).dot(state.vector());
}

DynamicsEngine build_engine(const OperatorParams& params, double divergence_threshold) {
  return DynamicsEngine(characteristic_poly(params), params.tau, signed_gain(params), divergence_threshold);
}

}  // namespace lagrange
