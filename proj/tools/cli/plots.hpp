#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rps::cli {

enum class PlotFormat { none, png, svg };

PlotFormat plot_format_from_string(const std::string& s);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Row-major grid: values[row * cols + col], rows along y.
struct Grid {
  std::vector<double> x;  // cols
  std::vector<double> y;  // rows
  std::vector<double> values;
};

struct PlotLabels {
  std::string title;
  std::string x;
  std::string y;
};

// Both return the written file, or nothing when format is none. `stem` has no
// extension.
std::optional<std::filesystem::path> line_plot(const std::filesystem::path& stem, const PlotLabels& labels,
                                               const std::vector<Series>& series, PlotFormat format);
std::optional<std::filesystem::path> heatmap(const std::filesystem::path& stem, const PlotLabels& labels,
                                             const Grid& grid, PlotFormat format);

}  // namespace rps::cli
