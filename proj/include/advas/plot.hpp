#pragma once

// Line plots of metrics CSVs: median over seeds with a min-max band, as SVG.
//
// Plot spec document:
//   {
//     "output": "ed.svg", "x_axis": "seconds", "y_axis": "energy_distance", "log_y": true,
//     "series": [{"label": "advas", "csvs": ["runs/advas/1/metrics.csv", ...]}]
//   }
// Relative paths resolve against the spec file's directory.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace advas {

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlotSeries {
  std::string label;
  std::vector<std::filesystem::path> csvs;
};

struct PlotSpec {
  std::filesystem::path output;
  std::string x_axis = "iter";  // "iter" or "seconds"
  std::string y_axis = "energy_distance";
  bool log_y = false;
  std::string title;
  std::vector<PlotSeries> series;
};

PlotSpec parse_plot_spec(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PlotSpec load_plot_spec(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of `name`, or -1.
  int column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

struct AggregatedSeries {
  std::string label;
  std::size_t runs = 0;
  std::vector<double> x;
  std::vector<double> median;
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Aligns rows across seeds by iteration, takes median / min / max of the
/// y column, and on the seconds axis cuts every series at the earliest final
/// time among all runs. Errors list every missing column or bad value.
std::vector<AggregatedSeries> aggregate(const PlotSpec& spec);

std::string render_svg(const PlotSpec& spec, const std::vector<AggregatedSeries>& series);

/// aggregate + render + write to spec.output.
void make_plot(const PlotSpec& spec);

}  // namespace advas
