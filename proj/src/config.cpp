#include "lagrange/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lagrange/error.hpp"

namespace lagrange {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidArgument(where + ": expected an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw InvalidArgument(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(where + "." + key + ": wrong type");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw InvalidArgument(where + "." + key + ": expected a number");
  return obj.at(key).get<double>();
}

std::size_t get_count(const json& obj, const std::string& key, const std::string& where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InvalidArgument(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> get_numbers(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) return {};
  const json& v = obj.at(key);
  if (!v.is_array()) throw InvalidArgument(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw InvalidArgument(where + "." + key + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Traversal parse_traversal(const std::string& s, const std::string& where) {
  if (s == "forward_backward") return Traversal::ForwardBackward;
  if (s == "loop") return Traversal::Loop;
  throw InvalidArgument(where + ".traversal: expected 'forward_backward' or 'loop'");
}

StreamSpec parse_stream(const json& j, const std::string& where) {
  check_keys(j, where,
             {"kind", "a", "b", "points", "slope", "intercept", "supervised", "class_lo", "class_hi", "steps",
              "half_width", "count", "path", "traversal"});
  StreamSpec s;
  const std::string kind = get<std::string>(j, "kind", where, "sweep");
  if (kind == "sweep") s.kind = StreamSpec::Kind::Sweep;
  else if (kind == "sweep_classes") s.kind = StreamSpec::Kind::SweepClasses;
  else if (kind == "spiral") s.kind = StreamSpec::Kind::Spiral;
  else if (kind == "flower") s.kind = StreamSpec::Kind::Flower;
  else if (kind == "grid") s.kind = StreamSpec::Kind::Grid;
  else if (kind == "csv") s.kind = StreamSpec::Kind::Csv;
  else throw InvalidArgument(where + ".kind: unknown stream kind '" + kind + "'");
  s.a = get_number(j, "a", where, s.a);
  s.b = get_number(j, "b", where, s.b);
  s.points = get_count(j, "points", where, s.points);
  s.slope = get_number(j, "slope", where, s.slope);
  s.intercept = get_number(j, "intercept", where, s.intercept);
  if (j.contains("supervised")) s.supervised = get_count(j, "supervised", where, 0);
  s.class_lo = get_number(j, "class_lo", where, s.class_lo);
  s.class_hi = get_number(j, "class_hi", where, s.class_hi);
  s.steps = get_count(j, "steps", where, s.steps);
  s.half_width = get_number(j, "half_width", where, s.half_width);
  s.count = get_count(j, "count", where, s.count);
  s.path = get<std::string>(j, "path", where, "");
  s.traversal = parse_traversal(get<std::string>(j, "traversal", where, "forward_backward"), where);
  if (s.kind == StreamSpec::Kind::Csv && s.path.empty()) throw InvalidArgument(where + ".path: required for csv");
  return s;
}

Root parse_root(const json& j, const std::string& where) {
  if (j.is_number()) return {Complex(j.get<double>(), 0.0), 1};
  check_keys(j, where, {"re", "im", "multiplicity"});
  Root r;
  r.value = Complex(get_number(j, "re", where, 0.0), get_number(j, "im", where, 0.0));
  r.multiplicity = static_cast<int>(get_count(j, "multiplicity", where, 1));
  return r;
}

DynamicsSpec parse_dynamics(const json& j, const std::string& where) {
  check_keys(j, where,
             {"order", "theta", "alphas", "gamma", "mu", "tau", "roots", "design", "eta"});
  DynamicsSpec d;
  d.tau = get_number(j, "tau", where, d.tau);
  const bool has_roots = j.contains("roots");
  const bool has_design = j.contains("design");
  if (has_roots && has_design) throw InvalidArgument(where + ": give either 'roots' or 'design', not both");

  if (has_roots || has_design) {
    for (const char* key : {"alphas", "gamma", "mu", "order"}) {
      if (j.contains(key)) throw InvalidArgument(where + "." + key + ": not allowed together with roots/design");
    }
    if (!j.contains("eta")) throw InvalidArgument(where + ".eta: required with roots/design");
    d.eta = get_number(j, "eta", where, 0.0);
    if (has_roots) {
      if (j.contains("theta")) throw InvalidArgument(where + ".theta: implied by roots");
      const json& list = j.at("roots");
      if (!list.is_array() || list.empty()) throw InvalidArgument(where + ".roots: expected a non-empty array");
      std::vector<Root> roots;
      for (std::size_t i = 0; i < list.size(); ++i) {
        roots.push_back(parse_root(list[i], where + ".roots[" + std::to_string(i) + "]"));
      }
      d.roots = RootSet(std::move(roots));
    } else {
      const std::string w = where + ".design";
      const json& dj = j.at("design");
      check_keys(dj, w, {"memory_span", "fractions"});
      DesignSpec spec;
      spec.memory_span = get_number(dj, "memory_span", w, spec.memory_span);
      if (dj.contains("fractions")) spec.fractions = get_numbers(dj, "fractions", w);
      if (!j.contains("theta")) throw InvalidArgument(where + ".theta: required with design");
      d.roots = design_roots(spec, get_number(j, "theta", where, 1.0)).roots;
    }
    return d;
  }

  if (j.contains("eta")) throw InvalidArgument(where + ".eta: only used with roots/design");
  OperatorParams p;
  p.order = static_cast<int>(get_count(j, "order", where, 1));
  p.theta = get_number(j, "theta", where, p.theta);
  if (j.contains("alphas")) {
    p.alphas = get_numbers(j, "alphas", where);
  } else if (p.order == 2) {
    p.alphas = {1.0, 1.0, 1.0};
  }
  p.gamma = get_number(j, "gamma", where, p.gamma);
  p.mu = get_number(j, "mu", where, p.mu);
  p.tau = d.tau;
  p.validate();
  d.params = p;
  return d;
}

ModelSpec parse_model(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "hidden", "init_scale", "y0", "b0"});
  ModelSpec m;
  const std::string kind = get<std::string>(j, "kind", where, "linear");
  if (kind == "linear") m.kind = ModelSpec::Kind::Linear;
  else if (kind == "mlp") m.kind = ModelSpec::Kind::Mlp;
  else throw InvalidArgument(where + ".kind: expected 'linear' or 'mlp'");
  m.hidden = get_count(j, "hidden", where, m.hidden);
  m.init_scale = get_number(j, "init_scale", where, m.init_scale);
  m.y0 = get_numbers(j, "y0", where);
  m.b0 = get_numbers(j, "b0", where);
  if (m.kind == ModelSpec::Kind::Mlp && (!m.y0.empty() || !m.b0.empty())) {
    throw InvalidArgument(where + ": y0/b0 apply to the linear model only");
  }
  return m;
}

PhaseSpec parse_phase(const json& j, const std::string& where) {
  check_keys(j, where, {"iterations", "tau", "supervision"});
  PhaseSpec p;
  if (!j.contains("iterations")) throw InvalidArgument(where + ".iterations: required");
  p.iterations = get_count(j, "iterations", where, 0);
  if (j.contains("tau")) p.tau = get_number(j, "tau", where, 0.0);
  p.supervision = get<bool>(j, "supervision", where, true);
  return p;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json stream_to_json(const StreamSpec& s) {
  static const char* kinds[] = {"sweep", "sweep_classes", "spiral", "flower", "grid", "csv"};
  json j = {{"kind", kinds[static_cast<int>(s.kind)]},
            {"a", s.a},
            {"b", s.b},
            {"points", s.points},
            {"slope", s.slope},
            {"intercept", s.intercept},
            {"class_lo", s.class_lo},
            {"class_hi", s.class_hi},
            {"steps", s.steps},
            {"half_width", s.half_width},
            {"count", s.count},
            {"traversal", s.traversal == Traversal::Loop ? "loop" : "forward_backward"}};
  if (s.supervised) j["supervised"] = *s.supervised;
  if (!s.path.empty()) j["path"] = s.path;
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
  check_keys(root, "config",
             {"version", "name", "dynamics", "model", "stream", "eval_sets", "phases", "iterations", "seed",
              "divergence_threshold", "abort_on_divergence", "gradient_point", "trace", "metrics_every"});
  if (!root.contains("version") || !root.at("version").is_number_integer() ||
      root.at("version").get<int>() != kConfigVersion) {
    throw InvalidArgument("config.version: expected " + std::to_string(kConfigVersion));
  }

  ExperimentConfig c;
  c.name = get<std::string>(root, "name", "config", c.name);
  if (!root.contains("dynamics")) throw InvalidArgument("config.dynamics: required");
  c.dynamics = parse_dynamics(root.at("dynamics"), "dynamics");
  if (root.contains("model")) c.model = parse_model(root.at("model"), "model");
  if (!root.contains("stream")) throw InvalidArgument("config.stream: required");
  c.stream = parse_stream(root.at("stream"), "stream");

  if (root.contains("eval_sets")) {
    const json& sets = root.at("eval_sets");
    if (!sets.is_array()) throw InvalidArgument("config.eval_sets: expected an array");
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const std::string w = "eval_sets[" + std::to_string(i) + "]";
      check_keys(sets[i], w, {"name", "stream"});
      if (!sets[i].contains("stream")) throw InvalidArgument(w + ".stream: required");
      c.eval_sets.push_back({get<std::string>(sets[i], "name", w, "eval" + std::to_string(i)),
                             parse_stream(sets[i].at("stream"), w + ".stream")});
    }
  }

  if (root.contains("phases") == root.contains("iterations")) {
    throw InvalidArgument("config: give exactly one of 'iterations' or 'phases'");
  }
  if (root.contains("iterations")) {
    PhaseSpec p;
    p.iterations = get_count(root, "iterations", "config", 0);
    c.phases.push_back(p);
  } else {
    const json& phases = root.at("phases");
    if (!phases.is_array() || phases.empty()) throw InvalidArgument("config.phases: expected a non-empty array");
    for (std::size_t i = 0; i < phases.size(); ++i) {
      c.phases.push_back(parse_phase(phases[i], "phases[" + std::to_string(i) + "]"));
    }
  }

  c.seed = get<std::uint64_t>(root, "seed", "config", 0);
  c.divergence_threshold = get_number(root, "divergence_threshold", "config", c.divergence_threshold);
  c.abort_on_divergence = get<bool>(root, "abort_on_divergence", "config", false);
  const std::string point = get<std::string>(root, "gradient_point", "config", "step_start");
  if (point == "step_start") c.gradient_point = GradientPoint::StepStart;
  else if (point == "mid_step") c.gradient_point = GradientPoint::MidStep;
  else throw InvalidArgument("config.gradient_point: expected 'step_start' or 'mid_step'");
  if (root.contains("trace")) {
    const json& t = root.at("trace");
    check_keys(t, "trace", {"record", "stride"});
    c.record_trace = get<bool>(t, "record", "trace", true);
    c.trace_stride = get_count(t, "stride", "trace", 1);
    if (c.trace_stride == 0) throw InvalidArgument("trace.stride: must be >= 1");
  }
  c.metrics_every = get_count(root, "metrics_every", "config", 1);
  if (c.metrics_every == 0) throw InvalidArgument("config.metrics_every: must be >= 1");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig c = parse_config(buffer.str());
  // Relative CSV paths resolve against the config's directory.
  auto resolve = [&](StreamSpec& s) {
    if (s.kind == StreamSpec::Kind::Csv && std::filesystem::path(s.path).is_relative()) {
      s.path = (path.parent_path() / s.path).string();
    }
  };
  resolve(c.stream);
  for (auto& e : c.eval_sets) resolve(e.stream);
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json root;
  root["version"] = kConfigVersion;
  root["name"] = c.name;
  json d;
  d["tau"] = c.dynamics.tau;
  if (c.dynamics.params) {
    const OperatorParams& p = *c.dynamics.params;
    d["order"] = p.order;
    d["theta"] = p.theta;
    d["alphas"] = p.alphas;
    d["gamma"] = p.gamma;
    d["mu"] = p.mu;
  } else if (c.dynamics.roots) {
    json roots = json::array();
    for (const Root& r : c.dynamics.roots->roots()) {
      roots.push_back({{"re", r.value.real()}, {"im", r.value.imag()}, {"multiplicity", r.multiplicity}});
    }
    d["roots"] = roots;
    d["eta"] = c.dynamics.eta;
  }
  root["dynamics"] = d;
  json m = {{"kind", c.model.kind == ModelSpec::Kind::Linear ? "linear" : "mlp"}};
  if (c.model.kind == ModelSpec::Kind::Linear) {
    m["y0"] = c.model.y0;
    m["b0"] = c.model.b0;
  } else {
    m["hidden"] = c.model.hidden;
    m["init_scale"] = c.model.init_scale;
  }
  root["model"] = m;
  root["stream"] = stream_to_json(c.stream);
  json sets = json::array();
  for (const auto& e : c.eval_sets) sets.push_back({{"name", e.name}, {"stream", stream_to_json(e.stream)}});
  root["eval_sets"] = sets;
  json phases = json::array();
  for (const auto& p : c.phases) {
    json pj = {{"iterations", p.iterations}, {"supervision", p.supervision}};
    if (p.tau) pj["tau"] = *p.tau;
    phases.push_back(pj);
  }
  root["phases"] = phases;
  root["seed"] = c.seed;
  root["divergence_threshold"] = c.divergence_threshold;
  root["abort_on_divergence"] = c.abort_on_divergence;
  root["gradient_point"] = c.gradient_point == GradientPoint::StepStart ? "step_start" : "mid_step";
  root["trace"] = {{"record", c.record_trace}, {"stride", c.trace_stride}};
  root["metrics_every"] = c.metrics_every;
  return root.dump(2);
}

// ---------------------------------------------------------------------------

namespace {

double parse_real(std::string_view s, const std::string& context) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("not a number: '" + context + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) throw InvalidArgument("empty entry in list '" + text + "'");
    items.push_back(item);
  }
  if (items.empty()) throw InvalidArgument("empty list");
  return items;
}

Complex parse_complex(const std::string& s) {
  if (s.back() != 'i') return {parse_real(s, s), 0.0};
  // Split "a+bi" / "a-bi" at the last sign that is not part of an exponent.
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size() - 1; k > 0; --k) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string_view body(s.data(), s.size() - 1);
  if (split == std::string::npos) {
    const std::string_view imag = body;
    return {0.0, imag.empty() || imag == "+" ? 1.0 : imag == "-" ? -1.0 : parse_real(imag, s)};
  }
  const std::string_view re = body.substr(0, split);
  const std::string_view im = body.substr(split);
  const double imag = im == "+" ? 1.0 : im == "-" ? -1.0 : parse_real(im, s);
  return {parse_real(re, s), imag};
}

}  // namespace

RootSet parse_root_list(const std::string& text) {
  std::vector<Complex> values;
  for (const auto& item : split_list(text)) values.push_back(parse_complex(item));
  return RootSet::cluster(values);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_real(item, item));
  return out;
}

}  // namespace lagrange
