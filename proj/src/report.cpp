#include "lagrange/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "lagrange/error.hpp"

namespace lagrange {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

constexpr double kPanelWidth = 900.0;
constexpr double kPanelHeight = 300.0;
constexpr double kMargin = 50.0;
constexpr std::size_t kMaxPolylinePoints = 3000;

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const TraceLog& log) {
  out << "t,weight,value,divergent\n";
  for (const auto& r : log.rows) {
    out << format_double(r.t) << ',' << log.weight_names.at(r.weight) << ',' << format_double(r.value) << ','
        << (r.divergent ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const TraceLog& log) {
  auto out = open_output(path);
  write_trace_csv(out, log);
}

TraceTable read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,weight,value,divergent") {
    throw ParseError(path.string() + ": missing trace header");
  }
  TraceTable table;
  std::unordered_map<std::string, std::size_t> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string t, name, value, flag;
    if (!std::getline(ss, t, ',') || !std::getline(ss, name, ',') || !std::getline(ss, value, ',') ||
        !std::getline(ss, flag)) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected 4 columns");
    }
    auto [it, inserted] = ids.emplace(name, table.weight_names.size());
    if (inserted) table.weight_names.push_back(name);
    try {
      table.rows.push_back({std::stod(t), it->second, std::stod(value), flag == "1"});
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": not a number");
    }
  }
  return table;
}

void write_metrics_csv(const std::filesystem::path& path, const TraceLog& log) {
  auto out = open_output(path);
  out << "phase,iteration,t,set,mse,accuracy,count\n";
  for (const auto& m : log.metrics) {
    out << m.phase << ',' << m.iteration << ',' << format_double(m.t) << ',' << m.set << ','
        << format_double(m.metrics.mse) << ',' << (m.metrics.accuracy ? format_double(*m.metrics.accuracy) : "")
        << ',' << m.metrics.count << '\n';
  }
}

void write_iteration_means_csv(const std::filesystem::path& path, const TraceLog& log) {
  auto out = open_output(path);
  out << "iteration";
  for (const auto& n : log.weight_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < log.iteration_means.size(); ++i) {
    out << i + 1;
    for (double v : log.iteration_means[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

double saturation_time(const RootSet& roots) {
  const double slowest = roots.min_abs_real_part();
  if (!(slowest > 0.0)) throw InvalidArgument("saturation time undefined for roots on the imaginary axis");
  return 40.0 / slowest;
}

std::vector<Sample> sample_impulse_response(const RootSet& roots, double t_end, std::size_t count) {
  if (count < 2) throw InvalidArgument("need at least 2 samples");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("sampling span must be positive and finite");
  const ImpulseResponse g(roots);
  std::vector<Sample> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t_end * static_cast<double>(k) / static_cast<double>(count - 1);
    out[k] = {t, g(t)};
  }
  return out;
}

void write_samples_csv(const std::filesystem::path& path, const std::vector<Sample>& samples,
                       const std::string& value_column) {
  auto out = open_output(path);
  out << "t," << value_column << '\n';
  for (const auto& s : samples) out << format_double(s.t) << ',' << format_double(s.value) << '\n';
}

std::string render_svg(const std::vector<Series>& panels) {
  const double height = kPanelHeight * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPanelWidth << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Series& s = panels[p];
    const double top = kPanelHeight * static_cast<double>(p);
    const double x0 = kMargin, x1 = kPanelWidth - 20.0;
    const double y0 = top + kPanelHeight - 30.0, y1 = top + 25.0;

    double tmin = 0.0, tmax = 1.0, vmin = -1.0, vmax = 1.0;
    std::vector<Sample> finite;
    for (const auto& smp : s.samples) {
      if (std::isfinite(smp.value)) finite.push_back(smp);
    }
    if (!finite.empty()) {
      tmin = finite.front().t;
      tmax = finite.back().t;
      const auto [lo, hi] = std::minmax_element(finite.begin(), finite.end(),
                                                [](const Sample& a, const Sample& b) { return a.value < b.value; });
      vmin = lo->value;
      vmax = hi->value;
    }
    if (tmax <= tmin) tmax = tmin + 1.0;
    if (vmax - vmin < 1e-12 * std::max(1.0, std::abs(vmax))) {
      vmin -= 0.5;
      vmax += 0.5;
    }
    auto sx = [&](double t) { return x0 + (t - tmin) / (tmax - tmin) * (x1 - x0); };
    auto sy = [&](double v) { return y0 + (v - vmin) / (vmax - vmin) * (y1 - y0); };

    svg << "<g>\n<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
        << "\" fill=\"none\" stroke=\"#999\"/>\n";
    svg << "<text x=\"" << x0 << "\" y=\"" << top + 16 << "\">" << s.label << "</text>\n";
    svg << "<text x=\"" << x0 - 4 << "\" y=\"" << y1 + 4 << "\" text-anchor=\"end\">" << vmax << "</text>\n";
    svg << "<text x=\"" << x0 - 4 << "\" y=\"" << y0 << "\" text-anchor=\"end\">" << vmin << "</text>\n";
    svg << "<text x=\"" << x0 << "\" y=\"" << y0 + 16 << "\">" << tmin << "</text>\n";
    svg << "<text x=\"" << x1 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"end\">t = " << tmax << "</text>\n";
    if (vmin < 0.0 && vmax > 0.0) {
      svg << "<line x1=\"" << x0 << "\" x2=\"" << x1 << "\" y1=\"" << sy(0.0) << "\" y2=\"" << sy(0.0)
          << "\" stroke=\"#ddd\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1\" points=\"";
    const std::size_t stride = std::max<std::size_t>(1, finite.size() / kMaxPolylinePoints);
    for (std::size_t k = 0; k < finite.size(); k += stride) {
      svg << sx(finite[k].t) << ',' << sy(finite[k].value) << ' ';
    }
    svg << "\"/>\n</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const std::filesystem::path& path, const std::vector<Series>& panels) {
  auto out = open_output(path);
  out << render_svg(panels);
}

std::vector<Series> weight_series(const TraceLog& log, const std::vector<std::string>& names,
                                  std::size_t max_panels) {
  std::vector<std::size_t> ids;
  if (names.empty()) {
    for (std::size_t w = 0; w < log.weight_names.size() && w < max_panels; ++w) ids.push_back(w);
  } else {
    for (const auto& n : names) ids.push_back(log.weight_index(n));
  }
  std::vector<Series> out;
  for (std::size_t w : ids) {
    Series s{log.weight_names[w], {}};
    for (const auto& r : log.rows) {
      if (r.weight == w) s.samples.push_back({r.t, r.value});
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lagrange
