#include "lagrange/models.hpp"

#include <algorithm>
#include <string>

#include "lagrange/error.hpp"

namespace lagrange {

namespace {

WeightState initial_state(int state_dim, std::span<const double> values) {
  if (static_cast<int>(values.size()) > state_dim) {
    throw InvalidArgument("initial condition has " + std::to_string(values.size()) +
                          " entries but the state dimension is " + std::to_string(state_dim));
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(state_dim);
  for (std::size_t i = 0; i < values.size(); ++i) x(static_cast<Eigen::Index>(i)) = values[i];
  return WeightState(x);
}

}  // namespace

std::vector<double> Model::parameters() const {
  std::vector<double> p(states_.size());
  std::transform(states_.begin(), states_.end(), p.begin(), [](const WeightState& s) { return s.value(); });
  return p;
}

bool Model::divergent() const {
  return std::any_of(states_.begin(), states_.end(), [](const WeightState& s) { return s.divergent(); });
}

void Model::check_input(std::span<const double> u) const {
  if (u.size() != input_dim()) {
    throw InvalidArgument("input has dimension " + std::to_string(u.size()) + ", model expects " +
                          std::to_string(input_dim()));
  }
}

void Model::check_target(std::span<const double> target) const {
  if (target.size() != output_dim()) {
    throw InvalidArgument("target has dimension " + std::to_string(target.size()) + ", model outputs " +
                          std::to_string(output_dim()));
  }
}

void Model::advance(const DynamicsEngine& engine, std::span<const double> u,
                    std::optional<std::span<const double>> target, GradientPoint point) {
  if (!target) {
    tick(engine);
    return;
  }
  std::vector<double> params;
  if (point == GradientPoint::StepStart) {
    params = parameters();
  } else {
    params.resize(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) params[i] = engine.mid_step_value(states_[i]);
  }
  const Gradients g = gradients_at(params, u, *target);
  for (std::size_t i = 0; i < states_.size(); ++i) engine.advance(states_[i], g.zeta[i]);
}

void Model::tick(const DynamicsEngine& engine) {
  for (auto& s : states_) engine.advance(s, std::nullopt);
}

// ---------------------------------------------------------------------------

LinearUnit::LinearUnit(int state_dim) : LinearUnit(state_dim, {}, {}) {}

LinearUnit::LinearUnit(int state_dim, std::span<const double> y0, std::span<const double> b0) {
  states_ = {initial_state(state_dim, y0), initial_state(state_dim, b0)};
  names_ = {"y", "b"};
}

std::vector<double> LinearUnit::forward_at(std::span<const double> params, std::span<const double> u) const {
  check_input(u);
  return {params[0] * u[0] + params[1]};
}

Gradients LinearUnit::gradients_at(std::span<const double> params, std::span<const double> u,
                                   std::span<const double> target) const {
  check_input(u);
  check_target(target);
  const double residual = params[0] * u[0] + params[1] - target[0];
  return {{residual * u[0], residual}};
}

// ---------------------------------------------------------------------------

Mlp::Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs, int state_dim, std::uint64_t seed,
         double init_scale)
    : inputs_(inputs), hidden_(hidden), outputs_(outputs) {
  if (inputs == 0 || hidden == 0 || outputs == 0) throw InvalidArgument("Mlp: dimensions must be positive");
  SplitMix64 rng(seed);
  const std::size_t count = parameter_count_for(inputs, hidden, outputs);
  states_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double w = rng.uniform(-init_scale, init_scale);
    states_.push_back(initial_state(state_dim, std::span<const double>(&w, 1)));
  }
  init_names();
}

Mlp::Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs, int state_dim,
         std::span<const double> weights)
    : inputs_(inputs), hidden_(hidden), outputs_(outputs) {
  if (inputs == 0 || hidden == 0 || outputs == 0) throw InvalidArgument("Mlp: dimensions must be positive");
  if (weights.size() != parameter_count_for(inputs, hidden, outputs)) {
    throw InvalidArgument("Mlp: expected " + std::to_string(parameter_count_for(inputs, hidden, outputs)) +
                          " weights, got " + std::to_string(weights.size()));
  }
  for (double w : weights) states_.push_back(initial_state(state_dim, std::span<const double>(&w, 1)));
  init_names();
}

void Mlp::init_names() {
  names_.clear();
  for (std::size_t h = 0; h < hidden_; ++h)
    for (std::size_t d = 0; d < inputs_; ++d)
      names_.push_back("W1[" + std::to_string(h) + "][" + std::to_string(d) + "]");
  for (std::size_t h = 0; h < hidden_; ++h) names_.push_back("b1[" + std::to_string(h) + "]");
  for (std::size_t o = 0; o < outputs_; ++o)
    for (std::size_t h = 0; h < hidden_; ++h)
      names_.push_back("W2[" + std::to_string(o) + "][" + std::to_string(h) + "]");
  for (std::size_t o = 0; o < outputs_; ++o) names_.push_back("b2[" + std::to_string(o) + "]");
}

std::vector<double> Mlp::preactivations(std::span<const double> params, std::span<const double> u) const {
  check_input(u);
  const double* w1 = params.data();
  const double* b1 = w1 + hidden_ * inputs_;
  std::vector<double> z(hidden_);
  for (std::size_t h = 0; h < hidden_; ++h) {
    double acc = b1[h];
    for (std::size_t d = 0; d < inputs_; ++d) acc += w1[h * inputs_ + d] * u[d];
    z[h] = acc;
  }
  return z;
}

std::vector<double> Mlp::forward_at(std::span<const double> params, std::span<const double> u) const {
  const std::vector<double> z = preactivations(params, u);
  const double* w2 = params.data() + hidden_ * inputs_ + hidden_;
  const double* b2 = w2 + outputs_ * hidden_;
  std::vector<double> f(outputs_);
  for (std::size_t o = 0; o < outputs_; ++o) {
    double acc = b2[o];
    for (std::size_t h = 0; h < hidden_; ++h) acc += w2[o * hidden_ + h] * std::max(z[h], 0.0);
    f[o] = acc;
  }
  return f;
}

Gradients Mlp::gradients_at(std::span<const double> params, std::span<const double> u,
                            std::span<const double> target) const {
  check_target(target);
  const std::vector<double> z = preactivations(params, u);
  const std::vector<double> f = forward_at(params, u);
  const double* w2 = params.data() + hidden_ * inputs_ + hidden_;

  Gradients g;
  g.zeta.assign(params.size(), 0.0);
  double* gw1 = g.zeta.data();
  double* gb1 = gw1 + hidden_ * inputs_;
  double* gw2 = gb1 + hidden_;
  double* gb2 = gw2 + outputs_ * hidden_;

  std::vector<double> delta_hidden(hidden_, 0.0);
  for (std::size_t o = 0; o < outputs_; ++o) {
    const double delta = f[o] - target[o];
    gb2[o] = delta;
    for (std::size_t h = 0; h < hidden_; ++h) {
      gw2[o * hidden_ + h] = delta * std::max(z[h], 0.0);
      delta_hidden[h] += w2[o * hidden_ + h] * delta;
    }
  }
  for (std::size_t h = 0; h < hidden_; ++h) {
    // Rectifier derivative taken as 0 at exactly 0.
    const double d = z[h] > 0.0 ? delta_hidden[h] : 0.0;
    gb1[h] = d;
    for (std::size_t i = 0; i < inputs_; ++i) gw1[h * inputs_ + i] = d * u[i];
  }
  return g;
}

}  // namespace lagrange
