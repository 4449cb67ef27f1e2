#pragma once

// Exact discretization of the impulse-forced weight ODE in companion form:
//   x[K+1] = e^{Aτ} x[K] + e^{Aτ/2} B u_K,
// with the supervision impulse fired in the middle of the step.

#include <Eigen/Dense>

#include <optional>

#include "lagrange/operator_params.hpp"
#include "lagrange/rootspace.hpp"

namespace lagrange {

/// e^M by scaling and squaring with a degree-13 diagonal Padé approximant.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m);

/// ẋ = A x + B u for the monic ODE y^{(n)} + β_{n-1} y^{(n-1)} + ... + β_0 y + u = 0.
struct CompanionSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;

  explicit CompanionSystem(const MonicPoly& poly);
  int dimension() const { return static_cast<int>(a.rows()); }
};

/// Where the gradient ζ is evaluated relative to the step carrying its impulse.
enum class GradientPoint {
  StepStart,  ///< weights at Kτ
  MidStep,    ///< weights propagated freely to Kτ + τ/2
};

/// Net response coefficient κ: a supervision of magnitude ζ adds κ ζ g(t - h)
/// to the weight. +γ/(μ α_1²) for the first-order operator, -γ/(μ α_2²) for the
/// second-order one.
double signed_gain(const OperatorParams& params);

/// Same sign rule with γ/μ given directly as η (leading α absorbed).
double signed_gain_from_eta(int order, double eta);

inline constexpr double kDefaultDivergenceThreshold = 1e6;

/// Largest supported state dimension (ODE order).
inline constexpr int kMaxStateDimension = 16;

/// Inline-storage state vector; stepping never touches the heap.
using StateVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxStateDimension, 1>;

/// A weight value followed by its first n-1 time derivatives.
class WeightState {
 public:
  explicit WeightState(int dimension);
  explicit WeightState(const Eigen::VectorXd& x);

  double value() const { return x_(0); }
  const StateVector& vector() const { return x_; }
  int dimension() const { return static_cast<int>(x_.size()); }
  bool divergent() const { return divergent_; }

 private:
  friend class DynamicsEngine;
  StateVector x_;
  bool divergent_ = false;
};

/// Precomputed stepping operators for one (poly, τ, κ). Immutable once built.
class DynamicsEngine {
 public:
  DynamicsEngine(const MonicPoly& poly, double tau, double kappa,
                 double divergence_threshold = kDefaultDivergenceThreshold);

  const CompanionSystem& system() const { return system_; }
  const MonicPoly& poly() const { return poly_; }
  double tau() const { return tau_; }
  double kappa() const { return kappa_; }
  double divergence_threshold() const { return divergence_threshold_; }
  int dimension() const { return system_.dimension(); }

  /// e^{Aτ}
  const Eigen::MatrixXd& transition() const { return transition_; }
  /// e^{Aτ/2}
  const Eigen::MatrixXd& half_transition() const { return half_transition_; }
  /// e^{Aτ/2} B
  const Eigen::VectorXd& half_input() const { return half_input_; }

  /// One step of length τ; an impulse of gradient magnitude `zeta` fires at mid-step.
  /// Divergent states are returned unchanged.
  WeightState step(const WeightState& state, std::optional<double> zeta) const;

  /// In-place variant of `step`.
  void advance(WeightState& state, std::optional<double> zeta) const;

  /// Weight value half a step ahead without forcing.
  double mid_step_value(const WeightState& state) const;

 private:
  MonicPoly poly_;
  CompanionSystem system_;
  double tau_;
  double kappa_;
  double divergence_threshold_;
  Eigen::MatrixXd transition_;
  Eigen::MatrixXd half_transition_;
  Eigen::VectorXd half_input_;
};

DynamicsEngine build_engine(const OperatorParams& params,
                            double divergence_threshold = kDefaultDivergenceThreshold);

inline double weight_value(const WeightState& state) { return state.value(); }

}  // namespace lagrange
