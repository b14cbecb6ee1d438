#include "advas/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace advas {

using nlohmann::json;

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

struct Run {
  std::filesystem::path file;
  std::map<long long, std::pair<double, double>> by_iter;  // iter -> (x, y)
  double final_seconds = 0.0;
};

}  // namespace

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PlotError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw PlotError(path.string() + ": empty file");
  std::stringstream header(line);
  for (std::string cell; std::getline(header, cell, ',');) table.columns.push_back(cell);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw PlotError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.columns.size()) {
      throw PlotError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.columns.size()) + " fields, found " + std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

PlotSpec parse_plot_spec(const json& doc, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  PlotSpec spec;
  try {
    spec.output = resolve(doc.at("output").get<std::string>());
    spec.x_axis = doc.value("x_axis", std::string("iter"));
    if (spec.x_axis == "iteration") spec.x_axis = "iter";
    if (spec.x_axis != "iter" && spec.x_axis != "seconds") {
      throw PlotError("x_axis: expected iteration or seconds, found '" + spec.x_axis + "'");
    }
    spec.y_axis = doc.value("y_axis", std::string("energy_distance"));
    spec.log_y = doc.value("log_y", false);
    spec.title = doc.value("title", std::string());
    for (const auto& s : doc.at("series")) {
      PlotSeries series;
      series.label = s.at("label").get<std::string>();
      for (const auto& c : s.at("csvs")) series.csvs.push_back(resolve(c.get<std::string>()));
      if (series.csvs.empty()) throw PlotError("series '" + series.label + "': no csvs");
      spec.series.push_back(std::move(series));
    }
  } catch (const json::exception& e) {
    throw PlotError(std::string("plot spec: ") + e.what());
  }
  if (spec.series.empty()) throw PlotError("plot spec: no series");
  return spec;
}

PlotSpec load_plot_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PlotError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw PlotError(path.string() + ": " + e.what());
  }
  return parse_plot_spec(doc, path.parent_path());
}

std::vector<AggregatedSeries> aggregate(const PlotSpec& spec) {
  std::vector<std::string> problems;
  std::vector<std::vector<Run>> all_runs;
  for (const auto& series : spec.series) {
    std::vector<Run> runs;
    for (const auto& file : series.csvs) {
      const CsvTable table = read_csv(file);
      const int ci = table.column("iter"), cs = table.column("seconds"), cy = table.column(spec.y_axis);
      for (auto [idx, name] : {std::pair{ci, "iter"}, std::pair{cs, "seconds"}, std::pair{cy, spec.y_axis.c_str()}}) {
        if (idx < 0) problems.push_back(file.string() + ": missing column '" + name + "'");
      }
      if (ci < 0 || cs < 0 || cy < 0) continue;
      Run run{file, {}, 0.0};
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const double y = row[cy];
        if (spec.log_y && !(y > 0.0) && !std::isnan(y)) {
          problems.push_back(file.string() + ": row " + std::to_string(r + 1) + " (iter " +
                             tick_label(row[ci]) + ") has " + spec.y_axis + " = " + tick_label(y) +
                             ", not plottable on a log axis");
        }
        if (std::isnan(y)) continue;
        run.by_iter[std::llround(row[ci])] = {spec.x_axis == "iter" ? row[ci] : row[cs], y};
      }
      if (!table.rows.empty()) run.final_seconds = table.rows.back()[cs];
      if (run.by_iter.empty()) problems.push_back(file.string() + ": no finite values in column '" + spec.y_axis + "'");
      runs.push_back(std::move(run));
    }
    all_runs.push_back(std::move(runs));
  }
  if (!problems.empty()) {
    std::string msg = "cannot plot:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw PlotError(msg);
  }

  double cutoff = INFINITY;
  if (spec.x_axis == "seconds") {
    for (const auto& runs : all_runs) {
      for (const auto& run : runs) cutoff = std::min(cutoff, run.final_seconds);
    }
  }

  std::vector<AggregatedSeries> out;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& runs = all_runs[s];
    AggregatedSeries agg;
    agg.label = spec.series[s].label;
    agg.runs = runs.size();
    for (const auto& [iter, point] : runs.front().by_iter) {
      std::vector<double> xs, ys;
      for (const auto& run : runs) {
        const auto it = run.by_iter.find(iter);
        if (it == run.by_iter.end()) break;
        xs.push_back(it->second.first);
        ys.push_back(it->second.second);
      }
      if (ys.size() != runs.size()) continue;
      const double x = median_of(xs);
      if (x > cutoff) continue;
      agg.x.push_back(x);
      agg.median.push_back(median_of(ys));
      agg.lo.push_back(*std::min_element(ys.begin(), ys.end()));
      agg.hi.push_back(*std::max_element(ys.begin(), ys.end()));
    }
    out.push_back(std::move(agg));
  }
  return out;
}

std::string render_svg(const PlotSpec& spec, const std::vector<AggregatedSeries>& series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.lo[i]);
      y1 = std::max(y1, s.hi[i]);
    }
  }
  if (!std::isfinite(x0)) throw PlotError("nothing to plot");
  if (x1 == x0) x1 = x0 + 1.0;
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  double ly0 = ty(y0), ly1 = ty(y1);
  if (ly1 == ly0) {
    ly0 -= 0.5;
    ly1 += 0.5;
  }
  const double pad = 0.05 * (ly1 - ly0);
  ly0 -= pad;
  ly1 += pad;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - (ty(v) - ly0) / (ly1 - ly0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(spec.title) << "</text>\n";
  }
  svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : linear_ticks(x0, x1)) {
    svg << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
        << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
        << tick_label(t) << "</text>\n";
  }
  std::vector<double> yticks;
  if (spec.log_y) {
    for (double e = std::ceil(ly0); e <= std::floor(ly1); e += 1.0) yticks.push_back(std::pow(10.0, e));
    if (yticks.size() < 2) {
      yticks.clear();
      for (double t : linear_ticks(ly0, ly1)) yticks.push_back(std::pow(10.0, t));
    }
  } else {
    yticks = linear_ticks(ly0, ly1);
  }
  for (double t : yticks) {
    svg << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
        << num(py(t)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">"
        << tick_label(t) << "</text>\n";
  }
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 15) << "\" text-anchor=\"middle\">"
      << (spec.x_axis == "iter" ? "iteration" : "seconds") << "</text>\n";
  svg << "<text transform=\"translate(18 " << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.y_axis) << (spec.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    if (ser.x.empty()) continue;
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) svg << num(px(ser.x[i])) << ',' << num(py(ser.hi[i])) << ' ';
    for (std::size_t i = ser.x.size(); i-- > 0;) svg << num(px(ser.x[i])) << ',' << num(py(ser.lo[i])) << ' ';
    svg << "\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      svg << (i ? " " : "") << num(px(ser.x[i])) << ',' << num(py(ser.median[i]));
    }
    svg << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
    svg << "<line x1=\"" << num(kLeft + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 32)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    svg << "<text x=\"" << num(kLeft + pw + 38) << "\" y=\"" << num(ly + 4) << "\">" << escape(ser.label) << " (n="
        << ser.runs << ")</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void make_plot(const PlotSpec& spec) {
  const std::string svg = render_svg(spec, aggregate(spec));
  if (spec.output.has_parent_path()) std::filesystem::create_directories(spec.output.parent_path());
  std::ofstream out(spec.output);
  if (!out) throw PlotError("cannot write " + spec.output.string());
  out << svg;
}

}  // namespace advas
