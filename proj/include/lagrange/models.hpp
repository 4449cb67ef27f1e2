#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lagrange/dynamics.hpp"

namespace lagrange {

/// ζ per scalar parameter, aligned with Model::parameter_names().
struct Gradients {
  std::vector<double> zeta;
};

/// SplitMix64; the only randomness source for weight initialization.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [lo, hi), 53-bit resolution.
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// A learnable function whose every scalar parameter is a weight evolving
/// under the shared dynamics engine.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;

  /// Output for explicit parameter values (same order as parameter_names()).
  virtual std::vector<double> forward_at(std::span<const double> params, std::span<const double> u) const = 0;
  /// ∂/∂w of ½‖f - f̄‖² at explicit parameter values.
  virtual Gradients gradients_at(std::span<const double> params, std::span<const double> u,
                                 std::span<const double> target) const = 0;

  std::vector<double> forward(std::span<const double> u) const { return forward_at(parameters(), u); }
  Gradients gradients(std::span<const double> u, std::span<const double> target) const {
    return gradients_at(parameters(), u, target);
  }

  std::size_t parameter_count() const { return states_.size(); }
  std::vector<double> parameters() const;
  const std::vector<std::string>& parameter_names() const { return names_; }
  const std::vector<WeightState>& states() const { return states_; }
  std::vector<WeightState>& states() { return states_; }
  bool divergent() const;

  /// One τ-step. With a target, every weight receives the impulse of its own ζ;
  /// without one, all weights evolve freely.
  void advance(const DynamicsEngine& engine, std::span<const double> u,
               std::optional<std::span<const double>> target,
               GradientPoint point = GradientPoint::StepStart);

  /// Free evolution for one step.
  void tick(const DynamicsEngine& engine);

 protected:
  void check_input(std::span<const double> u) const;
  void check_target(std::span<const double> target) const;

  std::vector<WeightState> states_;
  std::vector<std::string> names_;
};

/// f = y u + b with scalar input.
class LinearUnit final : public Model {
 public:
  /// Null initial conditions.
  explicit LinearUnit(int state_dim);
  /// Full initial state (value and derivatives) for y and b; missing trailing
  /// entries are zero.
  LinearUnit(int state_dim, std::span<const double> y0, std::span<const double> b0);

  std::size_t input_dim() const override { return 1; }
  std::size_t output_dim() const override { return 1; }
  std::unique_ptr<Model> clone() const override { return std::make_unique<LinearUnit>(*this); }

  std::vector<double> forward_at(std::span<const double> params, std::span<const double> u) const override;
  Gradients gradients_at(std::span<const double> params, std::span<const double> u,
                         std::span<const double> target) const override;
};

/// One hidden rectifier layer, identity output. Parameter order:
/// W1 (hidden x input, row-major), b1, W2 (output x hidden, row-major), b2.
class Mlp final : public Model {
 public:
  /// Weights uniform on [-init_scale, init_scale] from SplitMix64(seed); derivatives zero.
  Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs, int state_dim, std::uint64_t seed,
      double init_scale = 0.5);
  /// Explicit initial weight values.
  Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs, int state_dim, std::span<const double> weights);

  std::size_t input_dim() const override { return inputs_; }
  std::size_t output_dim() const override { return outputs_; }
  std::size_t hidden_units() const { return hidden_; }
  std::unique_ptr<Model> clone() const override { return std::make_unique<Mlp>(*this); }

  static std::size_t parameter_count_for(std::size_t inputs, std::size_t hidden, std::size_t outputs) {
    return hidden * inputs + hidden + outputs * hidden + outputs;
  }

  std::vector<double> forward_at(std::span<const double> params, std::span<const double> u) const override;
  Gradients gradients_at(std::span<const double> params, std::span<const double> u,
                         std::span<const double> target) const override;

  /// Hidden-layer preactivations W1 u + b1.
  std::vector<double> preactivations(std::span<const double> params, std::span<const double> u) const;

 private:
  void init_names();

  std::size_t inputs_;
  std::size_t hidden_;
  std::size_t outputs_;
};

}  // namespace lagrange
