#include "lagrange/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lagrange/error.hpp"

namespace lagrange {

// ---------------------------------------------------------------------------
// TrainingStream

std::size_t TrainingStream::input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

std::size_t TrainingStream::output_dim() const {
  for (const auto& l : labels) {
    if (l) return l->size();
  }
  return 0;
}

std::size_t TrainingStream::supervised_count() const {
  return static_cast<std::size_t>(std::count(supervised.begin(), supervised.end(), true));
}

std::size_t TrainingStream::labeled_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); }));
}

void TrainingStream::validate() const {
  if (labels.size() != inputs.size() || supervised.size() != inputs.size()) {
    throw InvalidArgument("TrainingStream: inputs, labels and supervision mask must have equal length");
  }
  const std::size_t d = input_dim();
  const std::size_t o = output_dim();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != d) throw InvalidArgument("TrainingStream: ragged input dimensions");
    if (labels[i] && labels[i]->size() != o) throw InvalidArgument("TrainingStream: ragged label dimensions");
    if (supervised[i] && !labels[i]) throw InvalidArgument("TrainingStream: supervised point without a label");
  }
}

std::vector<std::size_t> TrainingStream::pass_order(std::size_t pass) const {
  std::vector<std::size_t> order(size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (traversal == Traversal::ForwardBackward && pass % 2 == 1) std::reverse(order.begin(), order.end());
  return order;
}

std::vector<TrainingEvent> TrainingStream::events(std::size_t passes, double tau) const {
  std::vector<TrainingEvent> out;
  out.reserve(passes * size());
  std::size_t k = 0;
  for (std::size_t p = 0; p < passes; ++p) {
    for (std::size_t i : pass_order(p)) {
      ++k;
      TrainingEvent e;
      e.index = k;
      e.time = static_cast<double>(k) * tau;
      e.input = inputs[i];
      if (supervised[i]) e.target = labels[i];
      out.push_back(std::move(e));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::vector<bool> strided_mask(std::size_t points, std::size_t supervised) {
  if (supervised > points) throw InvalidArgument("supervised count exceeds the number of points");
  std::vector<bool> mask(points, false);
  for (std::size_t k = 0; k < supervised; ++k) mask[k * points / supervised] = true;
  return mask;
}

std::vector<double> linspace(double a, double b, std::size_t points) {
  std::vector<double> u(points);
  for (std::size_t i = 0; i < points; ++i) {
    u[i] = (i + 1 == points) ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return u;
}

void check_interval(double a, double b, std::size_t points) {
  if (points < 2) throw InvalidArgument("interval sweep needs at least 2 points");
  if (!(a < b)) throw InvalidArgument("interval sweep needs a < b");
}

}  // namespace

TrainingStream interval_sweep(double a, double b, std::size_t points, double slope, double intercept,
                              std::size_t supervised) {
  check_interval(a, b, points);
  TrainingStream s;
  for (double u : linspace(a, b, points)) {
    s.inputs.push_back({u});
    s.labels.push_back(std::vector<double>{slope * u + intercept});
  }
  s.supervised = strided_mask(points, supervised);
  return s;
}

TrainingStream interval_classes(double a, double b, std::size_t points, double lo, double hi,
                                std::size_t supervised) {
  check_interval(a, b, points);
  TrainingStream s;
  for (double u : linspace(a, b, points)) {
    s.inputs.push_back({u});
    s.labels.push_back(one_hot(u >= lo && u <= hi));
  }
  s.supervised = strided_mask(points, supervised);
  return s;
}

bool diamond_label(double x, double y) { return std::abs(x) + std::abs(y) <= 0.5; }

std::vector<double> one_hot(bool positive) { return positive ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0}; }

TrainingStream trajectory_2d(TrajectoryKind kind, std::size_t steps) {
  if (steps < 1) throw InvalidArgument("trajectory_2d: steps must be >= 1");
  TrainingStream s;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k);
    double x, y;
    if (kind == TrajectoryKind::Spiral) {
      x = (t / 100.0) * std::cos(t);
      y = (t / 100.0) * std::sin(t);
    } else {
      x = std::cos(10.0 * t) * std::cos(t);
      y = std::cos(10.0 * t) * std::sin(t);
    }
    s.inputs.push_back({x, y});
    s.labels.push_back(one_hot(diamond_label(x, y)));
    s.supervised.push_back(true);
  }
  return s;
}

TrainingStream grid_set(double half_width, std::size_t count) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (side * side != count || side == 0) throw InvalidArgument("grid_set: count must be a perfect square");
  if (!(half_width > 0.0)) throw InvalidArgument("grid_set: half width must be > 0");
  const double h = 2.0 * half_width / static_cast<double>(side);
  TrainingStream s;
  std::size_t positives = 0;
  for (std::size_t j = 0; j < side; ++j) {
    const double y = -half_width + h * (static_cast<double>(j) + 0.5);
    for (std::size_t i = 0; i < side; ++i) {
      const double x = -half_width + h * static_cast<double>(i);
      const bool label = diamond_label(x, y);
      positives += label ? 1 : 0;
      s.inputs.push_back({x, y});
      s.labels.push_back(one_hot(label));
      s.supervised.push_back(true);
    }
  }
  if (2 * positives != count) {
    throw NumericFailure("grid_set: label split is " + std::to_string(positives) + "/" +
                         std::to_string(count - positives) + ", expected an even split");
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": not a number: '" + cell + "'");
  }
  return v;
}

long parse_label(const std::string& cell, std::size_t line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || v < 0) {
    throw ParseError("line " + std::to_string(line) + ": label must be a non-negative integer: '" + cell + "'");
  }
  return v;
}

}  // namespace

TrainingStream parse_feature_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::optional<std::size_t> dim;
  std::optional<bool> labeled;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (const auto& cell : split_commas(trim(line))) {
      const auto eq = cell.find('=');
      if (eq == std::string::npos) throw ParseError("line " + std::to_string(line_no) + ": malformed header");
      const std::string key = trim(cell.substr(0, eq));
      const std::string value = trim(cell.substr(eq + 1));
      if (key == "dim") {
        const long d = parse_label(value, line_no);
        if (d < 1) throw ParseError("line " + std::to_string(line_no) + ": dim must be >= 1");
        dim = static_cast<std::size_t>(d);
      } else if (key == "labeled") {
        if (value != "0" && value != "1") throw ParseError("line " + std::to_string(line_no) + ": labeled must be 0 or 1");
        labeled = value == "1";
      } else {
        throw ParseError("line " + std::to_string(line_no) + ": unknown header key '" + key + "'");
      }
    }
    break;
  }
  if (!dim || !labeled) {
    if (line_no == 0 || !dim) throw ParseError("empty stream: missing header dim=<d>,labeled=<0|1>");
    throw ParseError("header must declare labeled=<0|1>");
  }

  TrainingStream s;
  std::vector<std::optional<long>> classes;
  long max_class = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split_commas(t);
    const bool has_label = *labeled && cells.size() == *dim + 1;
    if (cells.size() != *dim && !has_label) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(*dim) +
                       (*labeled ? " or " + std::to_string(*dim + 1) : std::string()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> u(*dim);
    for (std::size_t d = 0; d < *dim; ++d) u[d] = parse_double(cells[d], line_no);
    s.inputs.push_back(std::move(u));
    if (has_label) {
      const long c = parse_label(cells[*dim], line_no);
      max_class = std::max(max_class, c);
      classes.emplace_back(c);
    } else {
      classes.emplace_back(std::nullopt);
    }
  }
  if (s.inputs.empty()) throw ParseError("empty stream: no data rows");

  const std::size_t num_classes = static_cast<std::size_t>(std::max<long>(max_class + 1, 2));
  for (const auto& c : classes) {
    if (c) {
      std::vector<double> target(num_classes, 0.0);
      target[static_cast<std::size_t>(*c)] = 1.0;
      s.labels.emplace_back(std::move(target));
      s.supervised.push_back(true);
    } else {
      s.labels.emplace_back(std::nullopt);
      s.supervised.push_back(false);
    }
  }
  return s;
}

TrainingStream ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_feature_csv(buffer.str());
}

// ---------------------------------------------------------------------------

Metrics evaluate(const Model& model, const TrainingStream& set) {
  Metrics m;
  const bool classification = model.output_dim() > 1;
  std::size_t correct = 0;
  const std::vector<double> params = model.parameters();
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!set.labels[i]) continue;
    const auto& target = *set.labels[i];
    if (target.size() != model.output_dim()) throw InvalidArgument("evaluate: label dimension mismatch");
    const std::vector<double> f = model.forward_at(params, set.inputs[i]);
    double sq = 0.0;
    for (std::size_t o = 0; o < f.size(); ++o) sq += (f[o] - target[o]) * (f[o] - target[o]);
    m.mse += sq;
    if (classification) {
      const auto pred = std::max_element(f.begin(), f.end()) - f.begin();
      const auto truth = std::max_element(target.begin(), target.end()) - target.begin();
      correct += pred == truth ? 1 : 0;
    }
    ++m.count;
  }
  if (m.count == 0) throw InvalidArgument("evaluate: set has no labeled points");
  m.mse /= static_cast<double>(m.count);
  if (classification) m.accuracy = static_cast<double>(correct) / static_cast<double>(m.count);
  return m;
}

// ---------------------------------------------------------------------------
// Config-driven runs

TrainingStream build_stream(const StreamSpec& spec) {
  TrainingStream s;
  switch (spec.kind) {
    case StreamSpec::Kind::Sweep:
      s = interval_sweep(spec.a, spec.b, spec.points, spec.slope, spec.intercept,
                         spec.supervised.value_or(spec.points));
      break;
    case StreamSpec::Kind::SweepClasses:
      s = interval_classes(spec.a, spec.b, spec.points, spec.class_lo, spec.class_hi,
                           spec.supervised.value_or(spec.points));
      break;
    case StreamSpec::Kind::Spiral:
      s = trajectory_2d(TrajectoryKind::Spiral, spec.steps);
      break;
    case StreamSpec::Kind::Flower:
      s = trajectory_2d(TrajectoryKind::Flower, spec.steps);
      break;
    case StreamSpec::Kind::Grid:
      s = grid_set(spec.half_width, spec.count);
      break;
    case StreamSpec::Kind::Csv:
      s = ingest_csv(spec.path);
      break;
  }
  s.traversal = spec.traversal;
  s.validate();
  return s;
}

int DynamicsSpec::order() const {
  if (params) return params->order;
  if (!roots) throw InvalidArgument("dynamics: either operator parameters or roots are required");
  if (roots->degree() == 2) return 1;
  if (roots->degree() == 4) return 2;
  throw InvalidArgument("dynamics: roots must have degree 2 or 4 to fix the gain sign");
}

MonicPoly DynamicsSpec::poly() const {
  if (params) return characteristic_poly(*params);
  if (!roots) throw InvalidArgument("dynamics: either operator parameters or roots are required");
  return characteristic_poly(*roots);
}

double DynamicsSpec::kappa() const {
  if (params) return signed_gain(*params);
  return signed_gain_from_eta(order(), eta);
}

std::unique_ptr<Model> build_model(const ExperimentConfig& config, const TrainingStream& stream) {
  const int n = config.dynamics.poly().degree();
  if (config.model.kind == ModelSpec::Kind::Linear) {
    if (stream.input_dim() != 1 || stream.output_dim() > 1) {
      throw InvalidArgument("linear model needs scalar inputs and targets");
    }
    return std::make_unique<LinearUnit>(n, config.model.y0, config.model.b0);
  }
  const std::size_t outputs = std::max<std::size_t>(stream.output_dim(), 1);
  return std::make_unique<Mlp>(stream.input_dim(), config.model.hidden, outputs, n, config.seed,
                               config.model.init_scale);
}

std::vector<TraceRow> TraceLog::series(std::size_t weight) const {
  std::vector<TraceRow> out;
  for (const auto& r : rows) {
    if (r.weight == weight) out.push_back(r);
  }
  return out;
}

std::size_t TraceLog::weight_index(const std::string& name) const {
  const auto it = std::find(weight_names.begin(), weight_names.end(), name);
  if (it == weight_names.end()) throw InvalidArgument("unknown weight '" + name + "'");
  return static_cast<std::size_t>(it - weight_names.begin());
}

RunResult run_experiment(const ExperimentConfig& config) {
  const TrainingStream stream = build_stream(config.stream);
  if (stream.size() == 0) throw InvalidArgument("run_experiment: empty training stream");
  std::vector<std::pair<std::string, TrainingStream>> eval_sets;
  if (stream.labeled_count() > 0) eval_sets.emplace_back("train", stream);
  for (const auto& e : config.eval_sets) eval_sets.emplace_back(e.name, build_stream(e.stream));

  RunResult result;
  result.model = build_model(config, stream);
  Model& model = *result.model;
  TraceLog& log = result.trace;
  log.weight_names = model.parameter_names();

  const MonicPoly poly = config.dynamics.poly();
  const double kappa = config.dynamics.kappa();
  std::map<double, DynamicsEngine> engines;
  auto engine_for = [&](double tau) -> const DynamicsEngine& {
    auto it = engines.find(tau);
    if (it == engines.end()) {
      it = engines.emplace(tau, DynamicsEngine(poly, tau, kappa, config.divergence_threshold)).first;
    }
    return it->second;
  };

  const std::size_t stride = std::max<std::size_t>(config.trace_stride, 1);
  std::size_t steps = 0;
  auto record = [&](double t) {
    if (!config.record_trace) return;
    const auto& states = model.states();
    for (std::size_t w = 0; w < states.size(); ++w) {
      log.rows.push_back({t, w, states[w].value(), states[w].divergent()});
    }
  };
  auto note_divergence = [&](double t, std::size_t iteration) {
    if (!log.divergence_time && model.divergent()) {
      log.divergence_time = t;
      log.divergence_iteration = iteration;
    }
  };

  double t = 0.0;
  record(t);
  std::size_t total_iterations = 0;
  for (const auto& p : config.phases) total_iterations += p.iterations;

  if (total_iterations > 0) {
    // Examples start at t = τ; the first interval is free evolution.
    const double tau0 = config.phases.front().tau.value_or(config.dynamics.tau);
    model.tick(engine_for(tau0));
    ++steps;
    t = tau0;
    if (steps % stride == 0) record(t);
    note_divergence(t, 0);
  }

  std::size_t pass = 0;
  bool stop = false;
  for (std::size_t phase = 0; phase < config.phases.size() && !stop; ++phase) {
    const PhaseSpec& spec = config.phases[phase];
    const double tau = spec.tau.value_or(config.dynamics.tau);
    const DynamicsEngine& engine = engine_for(tau);
    const double phase_start = t;
    std::size_t phase_steps = 0;
    for (std::size_t it = 0; it < spec.iterations && !stop; ++it) {
      std::vector<double> sums(model.parameter_count(), 0.0);
      double peak = 0.0;
      std::size_t visited = 0;
      for (std::size_t idx : stream.pass_order(pass)) {
        std::optional<std::span<const double>> target;
        if (spec.supervision && stream.supervised[idx]) target = std::span<const double>(*stream.labels[idx]);
        model.advance(engine, stream.inputs[idx], target, config.gradient_point);
        ++phase_steps;
        ++steps;
        t = phase_start + static_cast<double>(phase_steps) * tau;
        if (steps % stride == 0) record(t);
        const auto& states = model.states();
        for (std::size_t w = 0; w < states.size(); ++w) {
          sums[w] += states[w].value();
          peak = std::max(peak, std::abs(states[w].value()));
        }
        ++visited;
        note_divergence(t, pass + 1);
        if (config.abort_on_divergence && model.divergent()) {
          stop = true;
          break;
        }
      }
      ++pass;
      for (double& s : sums) s /= static_cast<double>(std::max<std::size_t>(visited, 1));
      log.iteration_means.push_back(std::move(sums));
      log.iteration_peaks.push_back(peak);

      const bool last_of_phase = it + 1 == spec.iterations;
      const std::size_t every = std::max<std::size_t>(config.metrics_every, 1);
      if (pass % every == 0 || last_of_phase || stop) {
        for (const auto& [name, set] : eval_sets) {
          log.metrics.push_back({phase, pass, t, name, evaluate(model, set)});
        }
      }
    }
  }
  log.final_time = t;
  log.final_weights = model.parameters();
  return result;
}

}  // namespace lagrange
