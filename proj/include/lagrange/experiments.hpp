#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lagrange/dynamics.hpp"
#include "lagrange/models.hpp"
#include "lagrange/operator_params.hpp"

namespace lagrange {

enum class Traversal {
  /// a→b then b→a; each directional pass visits every point, so the
  /// turnaround point is seen twice in a row.
  ForwardBackward,
  /// a→b, a→b, ...
  Loop,
};

struct TrainingEvent {
  std::size_t index = 0;  ///< 1-based
  double time = 0.0;      ///< index * τ within a constant-τ run
  std::vector<double> input;
  std::optional<std::vector<double>> target;  ///< present iff supervised
};

/// Base points of one pass plus their labels and supervision mask.
struct TrainingStream {
  std::vector<std::vector<double>> inputs;
  /// Label per point; may be present on unsupervised points (used for evaluation).
  std::vector<std::optional<std::vector<double>>> labels;
  std::vector<bool> supervised;
  Traversal traversal = Traversal::ForwardBackward;

  std::size_t size() const { return inputs.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t supervised_count() const;
  std::size_t labeled_count() const;

  /// Throws InvalidArgument on ragged dimensions or mask/label inconsistencies.
  void validate() const;

  /// Point indices visited in directional pass number `pass` (0-based).
  std::vector<std::size_t> pass_order(std::size_t pass) const;

  /// Fully expanded event list for `passes` passes with spacing τ, first event at τ.
  std::vector<TrainingEvent> events(std::size_t passes, double tau) const;
};

/// `points` equally spaced inputs on [a, b] with targets slope*u + intercept;
/// `supervised` points (evenly strided) carry supervision.
TrainingStream interval_sweep(double a, double b, std::size_t points, double slope, double intercept,
                              std::size_t supervised);

/// Same inputs, one-hot targets: [1 0] inside [lo, hi], [0 1] outside.
TrainingStream interval_classes(double a, double b, std::size_t points, double lo, double hi,
                                std::size_t supervised);

enum class TrajectoryKind { Spiral, Flower };

/// True when |x| + |y| <= 0.5.
bool diamond_label(double x, double y);
std::vector<double> one_hot(bool positive);

/// Points u(t), t = 1..steps, all supervised, diamond labels.
TrainingStream trajectory_2d(TrajectoryKind kind, std::size_t steps = 100);

/// count = side² points over [-hw, hw]²: x on cell edges, y on cell centres.
/// Throws NumericFailure unless labels split exactly in half.
TrainingStream grid_set(double half_width = 0.5, std::size_t count = 100);

/// Header `dim=<d>,labeled=<0|1>`, then rows of d floats (+ integer class label).
TrainingStream ingest_csv(const std::filesystem::path& path);
TrainingStream parse_feature_csv(const std::string& text);

struct Metrics {
  double mse = 0.0;
  /// Only for multi-output (classification) models.
  std::optional<double> accuracy;
  std::size_t count = 0;
};

/// MSE = mean ‖f - f̄‖² over labeled points; accuracy by argmax.
Metrics evaluate(const Model& model, const TrainingStream& set);

// ---------------------------------------------------------------------------
// Experiment configuration

struct StreamSpec {
  enum class Kind { Sweep, SweepClasses, Spiral, Flower, Grid, Csv };
  Kind kind = Kind::Sweep;
  double a = -1.0;
  double b = 1.0;
  std::size_t points = 10;
  double slope = 2.0;
  double intercept = -1.0;
  std::optional<std::size_t> supervised;  ///< default: all points
  double class_lo = -0.5;
  double class_hi = 0.5;
  std::size_t steps = 100;
  double half_width = 0.5;
  std::size_t count = 100;
  std::string path;
  Traversal traversal = Traversal::ForwardBackward;
};

TrainingStream build_stream(const StreamSpec& spec);

struct DynamicsSpec {
  /// Physical parameters, when given; otherwise `roots` + `eta`.
  std::optional<OperatorParams> params;
  std::optional<RootSet> roots;
  double eta = 0.0;  ///< γ/μ with the leading α absorbed; used with `roots`
  double tau = 0.01;

  int order() const;
  MonicPoly poly() const;
  double kappa() const;
};

struct ModelSpec {
  enum class Kind { Linear, Mlp };
  Kind kind = Kind::Linear;
  std::size_t hidden = 20;
  double init_scale = 0.5;
  std::vector<double> y0;  ///< linear: initial y, y', ...
  std::vector<double> b0;
};

struct PhaseSpec {
  std::size_t iterations = 1;
  std::optional<double> tau;  ///< default: dynamics τ
  bool supervision = true;
};

struct EvalSetSpec {
  std::string name;
  StreamSpec stream;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DynamicsSpec dynamics;
  ModelSpec model;
  StreamSpec stream;
  std::vector<EvalSetSpec> eval_sets;
  std::vector<PhaseSpec> phases;
  std::uint64_t seed = 0;
  double divergence_threshold = kDefaultDivergenceThreshold;
  bool abort_on_divergence = false;
  GradientPoint gradient_point = GradientPoint::StepStart;
  bool record_trace = true;
  std::size_t trace_stride = 1;
  std::size_t metrics_every = 1;
};

struct TraceRow {
  double t = 0.0;
  std::size_t weight = 0;
  double value = 0.0;
  bool divergent = false;
};

struct MetricsSnapshot {
  std::size_t phase = 0;
  std::size_t iteration = 0;  ///< global directional-pass count, 1-based
  double t = 0.0;
  std::string set;
  Metrics metrics;
};

struct TraceLog {
  std::vector<std::string> weight_names;
  std::vector<TraceRow> rows;
  std::vector<MetricsSnapshot> metrics;
  /// Mean of every weight over the steps of each iteration (always recorded).
  std::vector<std::vector<double>> iteration_means;
  /// Largest |weight| seen during each iteration.
  std::vector<double> iteration_peaks;
  std::optional<double> divergence_time;
  std::optional<std::size_t> divergence_iteration;
  double final_time = 0.0;
  std::vector<double> final_weights;

  bool diverged() const { return divergence_time.has_value(); }
  /// Trace rows of one weight, in time order.
  std::vector<TraceRow> series(std::size_t weight) const;
  std::size_t weight_index(const std::string& name) const;
};

struct RunResult {
  TraceLog trace;
  std::unique_ptr<Model> model;  ///< final state
};

/// Builds the model for a config (seeded).
std::unique_ptr<Model> build_model(const ExperimentConfig& config, const TrainingStream& stream);

RunResult run_experiment(const ExperimentConfig& config);

}  // namespace lagrange
