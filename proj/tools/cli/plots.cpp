#include "cli/plots.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace rps::cli {

namespace {

constexpr int width = 800, height = 500;
constexpr int left = 70, right = 20, top = 40, bottom = 50;

using Rgb = std::array<unsigned char, 3>;

const std::array<Rgb, 4> palette{{{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}}};

// Piecewise-linear dark blue -> cyan -> yellow -> white.
Rgb colormap(double v) {
  static const std::array<std::array<double, 3>, 4> stops{{{0, 0, 60}, {0, 170, 200}, {250, 220, 40}, {255, 255, 255}}};
  v = std::clamp(v, 0.0, 1.0) * 3.0;
  const int i = std::min(2, static_cast<int>(v));
  const double a = v - i;
  Rgb c{};
  for (int k = 0; k < 3; ++k) c[k] = static_cast<unsigned char>((1 - a) * stops[i][k] + a * stops[i + 1][k]);
  return c;
}

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi == lo) lo -= 0.5, hi += 0.5;
  }
  double frac(double v) const { return (v - lo) / (hi - lo); }
};

struct Frame {
  Range x, y;
  double px(double v) const { return left + x.frac(v) * (width - left - right); }
  double py(double v) const { return height - bottom - y.frac(v) * (height - top - bottom); }
};

class Raster {
 public:
  Raster() : pix_(static_cast<std::size_t>(width) * height, Rgb{255, 255, 255}) {}

  void set(int x, int y, const Rgb& c) {
    if (x >= 0 && x < width && y >= 0 && y < height) pix_[static_cast<std::size_t>(y) * width + x] = c;
  }

  void line(double x0, double y0, double x1, double y1, const Rgb& c) {
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
    for (int s = 0; s <= steps; ++s) {
      const double a = static_cast<double>(s) / steps;
      set(static_cast<int>(std::lround(x0 + a * (x1 - x0))), static_cast<int>(std::lround(y0 + a * (y1 - y0))), c);
    }
  }

  void fill(int x0, int y0, int x1, int y1, const Rgb& c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }

  void axes() {
    const Rgb k{0, 0, 0};
    line(left, top, left, height - bottom, k);
    line(left, height - bottom, width - right, height - bottom, k);
  }

  void write(const std::filesystem::path& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!fp) throw std::runtime_error("cannot create " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng: cannot allocate writer");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng: write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
      auto row = const_cast<Rgb*>(pix_.data() + static_cast<std::size_t>(y) * width);
      png_write_row(png, reinterpret_cast<png_bytep>(row));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }

 private:
  std::vector<Rgb> pix_;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

void svg_frame(std::ostream& os, const Frame& f, const PlotLabels& labels) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(labels.title)
     << "</text>\n"
     << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">" << escape(labels.x)
     << "</text>\n"
     << "<text x=\"16\" y=\"" << height / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << height / 2
     << ")\">" << escape(labels.y) << "</text>\n";
  os << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
     << "\" y2=\"" << height - bottom << "\"/><line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\""
     << width - right << "\" y2=\"" << height - bottom << "\"/></g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double a = i / 4.0;
    const double xv = f.x.lo + a * (f.x.hi - f.x.lo), yv = f.y.lo + a * (f.y.hi - f.y.lo);
    os << "<text x=\"" << f.px(xv) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">" << xv
       << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
}

}  // namespace

PlotFormat plot_format_from_string(const std::string& s) {
  if (s == "none") return PlotFormat::none;
  if (s == "png") return PlotFormat::png;
  if (s == "svg") return PlotFormat::svg;
  throw std::invalid_argument("plot format must be one of none, png, svg");
}

std::optional<std::filesystem::path> line_plot(const std::filesystem::path& stem, const PlotLabels& labels,
                                               const std::vector<Series>& series, PlotFormat format) {
  if (format == PlotFormat::none) return std::nullopt;
  Frame f;
  for (const auto& s : series) {
    for (double v : s.x) f.x.add(v);
    for (double v : s.y) f.y.add(v);
  }
  f.x.settle();
  f.y.settle();

  if (format == PlotFormat::png) {
    Raster r;
    r.axes();
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& s = series[i];
      for (std::size_t k = 1; k < std::min(s.x.size(), s.y.size()); ++k)
        r.line(f.px(s.x[k - 1]), f.py(s.y[k - 1]), f.px(s.x[k]), f.py(s.y[k]), palette[i % palette.size()]);
    }
    auto path = stem;
    path += ".png";
    r.write(path);
    return path;
  }

  std::ostringstream os;
  os.precision(6);
  svg_frame(os, f, labels);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const auto color = hex(palette[i % palette.size()]);
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) os << f.px(s.x[k]) << ',' << f.py(s.y[k]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << width - right - 150 << "\" y=\"" << top + 16 * (i + 1) << "\" fill=\"" << color << "\">"
       << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  auto path = stem;
  path += ".svg";
  std::ofstream(path) << os.str();
  return path;
}

std::optional<std::filesystem::path> heatmap(const std::filesystem::path& stem, const PlotLabels& labels,
                                             const Grid& grid, PlotFormat format) {
  if (format == PlotFormat::none) return std::nullopt;
  if (grid.x.empty() || grid.y.empty() || grid.values.size() != grid.x.size() * grid.y.size())
    throw std::invalid_argument("heatmap: grid dimensions do not match values");
  Frame f;
  for (double v : grid.x) f.x.add(v);
  for (double v : grid.y) f.y.add(v);
  f.x.settle();
  f.y.settle();
  Range z;
  for (double v : grid.values) z.add(v);
  z.settle();

  const std::size_t nx = grid.x.size(), ny = grid.y.size();
  const double cw = static_cast<double>(width - left - right) / static_cast<double>(nx);
  const double ch = static_cast<double>(height - top - bottom) / static_cast<double>(ny);
  auto cell = [&](std::size_t row, std::size_t col) {
    const double x0 = left + col * cw, y1 = height - bottom - row * ch;
    return std::array<double, 4>{x0, y1 - ch, x0 + cw, y1};
  };

  if (format == PlotFormat::png) {
    Raster r;
    for (std::size_t row = 0; row < ny; ++row)
      for (std::size_t col = 0; col < nx; ++col) {
        const auto b = cell(row, col);
        r.fill(static_cast<int>(b[0]), static_cast<int>(b[1]), static_cast<int>(std::ceil(b[2])) - 1,
               static_cast<int>(std::ceil(b[3])) - 1, colormap(z.frac(grid.values[row * nx + col])));
      }
    r.axes();
    auto path = stem;
    path += ".png";
    r.write(path);
    return path;
  }

  std::ostringstream os;
  os.precision(6);
  svg_frame(os, f, labels);
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t row = 0; row < ny; ++row)
    for (std::size_t col = 0; col < nx; ++col) {
      const auto b = cell(row, col);
      os << "<rect x=\"" << b[0] << "\" y=\"" << b[1] << "\" width=\"" << cw + 0.5 << "\" height=\"" << ch + 0.5
         << "\" fill=\"" << hex(colormap(z.frac(grid.values[row * nx + col]))) << "\"/>\n";
    }
  os << "</g>\n</svg>\n";
  auto path = stem;
  path += ".svg";
  std::ofstream(path) << os.str();
  return path;
}

}  // namespace rps::cli
