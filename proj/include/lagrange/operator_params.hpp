#pragma once

#include <string>
#include <vector>

#include "lagrange/rootspace.hpp"

namespace lagrange {

/// Physical knobs of the learning operator T = α_0 + α_1 D (+ α_2 D²).
struct OperatorParams {
  int order = 1;                      ///< 1 or 2
  double theta = 1.0;                 ///< dissipation rate, > 0
  std::vector<double> alphas{1.0, 1.0};  ///< α_0..α_order
  double gamma = -1.0;                ///< ±1
  double mu = 1.0;                    ///< mass, > 0
  double tau = 0.01;                  ///< sampling step, > 0

  /// Throws InvalidArgument when an invariant is broken.
  void validate() const;
};

struct StabilityCondition {
  std::string name;
  bool satisfied = false;
  /// lhs - rhs of the inequality; positive when satisfied.
  double margin = 0.0;
};

struct StabilityReport {
  bool stable = false;
  std::vector<StabilityCondition> conditions;
};

/// s² + θ s + β with β = (α_0 α_1 θ - α_0²) / α_1².
MonicPoly betas_first(double theta, double alpha0, double alpha1);

/// Quartic of the second-order operator; β_3 = 2θ.
MonicPoly betas_fourth(double theta, double alpha0, double alpha1, double alpha2);

/// Characteristic polynomial for either operator order.
MonicPoly characteristic_poly(const OperatorParams& params);

/// Routh–Hurwitz test for degree 2 and 4.
StabilityReport routh_hurwitz(const MonicPoly& poly);

/// All roots with multiplicities, by Durand–Kerner iteration.
RootSet poly_roots(const MonicPoly& poly);

struct FirstOrderDesign {
  double theta = 0.0;
  /// Candidate ratios α_0/α_1.
  std::vector<double> nu;
};

/// θ and α_0/α_1 candidates from two real negative roots.
FirstOrderDesign roots_to_params_first(Complex lambda1, Complex lambda2);

struct SecondOrderBranch {
  double nu0 = 0.0;     ///< α_0/α_2
  double nu1 = 0.0;     ///< α_1/α_2
  double alpha1 = 0.0;  ///< α_1 when α_0 = α_2 = 1
};

struct SecondOrderDesign {
  double theta = 0.0;
  std::vector<SecondOrderBranch> branches;
};

/// Recovers operator parameters from the four roots of a quartic.
/// Throws Infeasible when no (θ, α) parameterization exists.
SecondOrderDesign roots_to_params_second(const RootSet& roots);

struct DesignSpec {
  double memory_span = 1e8;                    ///< a, with λ_1 = -1/a
  std::vector<double> fractions{0.60, 0.65, 0.75};  ///< remaining roots as -f θ
};

struct DesignResult {
  RootSet roots;
  std::vector<std::string> warnings;
};

DesignResult design_roots(const DesignSpec& spec, double theta);

}  // namespace lagrange
