#include "ppdtd/plotdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "ppdtd/errors.hpp"
#include "ppdtd/metrics.hpp"

namespace ppdtd {

double metric_value(const MetricsRow& row, std::string_view metric) {
  if (metric == "consensus_error") return row.consensus_error;
  if (metric == "td_error_mean_abs") return row.td_error_mean_abs;
  if (metric == "optimality_gap") return row.optimality_gap;
  if (metric == "lyapunov") return row.lyapunov;
  throw InvalidArgument("unknown plot metric '" + std::string(metric) + "'");
}

std::string plot_long_csv(const std::map<std::string, Series>& series) {
  std::string out = "iteration,series,value\n";
  for (const auto& [name, points] : series) {
    for (const auto& [x, y] : points) {
      out += std::to_string(static_cast<long long>(x));
      out += ',';
      out += name;
      out += ',';
      out += format_number(y);
      out += '\n';
    }
  }
  return out;
}

namespace {

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string coord(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::fixed, 2);
  return std::string(buffer, result.ptr);
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string plot_svg(const std::map<std::string, Series>& series, std::string_view title) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& [name, points] : series) {
    for (const auto& [x, y] : points) {
      if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(y)) continue;
      x_lo = std::min(x_lo, std::log10(x));
      x_hi = std::max(x_hi, std::log10(x));
      y_lo = std::min(y_lo, std::log10(y));
      y_hi = std::max(y_hi, std::log10(y));
    }
  }
  if (!(x_lo <= x_hi)) x_lo = 0, x_hi = 1;
  if (!(y_lo <= y_hi)) y_lo = 0, y_hi = 1;
  if (x_hi - x_lo < 1e-9) x_hi = x_lo + 1;
  if (y_hi - y_lo < 1e-9) y_hi = y_lo + 1;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (std::log10(x) - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + (y_hi - std::log10(y)) / (y_hi - y_lo) * plot_h; };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(kWidth) + "\" height=\"" +
         coord(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + coord(kWidth) + "\" height=\"" + coord(kHeight) +
         "\" fill=\"white\"/>\n";
  out += "<text x=\"" + coord(kLeft) + "\" y=\"24\" font-size=\"14\">" + xml_escape(title) + "</text>\n";
  out += "<rect x=\"" + coord(kLeft) + "\" y=\"" + coord(kTop) + "\" width=\"" + coord(plot_w) +
         "\" height=\"" + coord(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(std::ceil(y_lo)); e <= static_cast<int>(std::floor(y_hi)); ++e) {
    const double y = kTop + (y_hi - e) / (y_hi - y_lo) * plot_h;
    out += "<text x=\"" + coord(kLeft - 6) + "\" y=\"" + coord(y + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(e) + "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(x_lo)); e <= static_cast<int>(std::floor(x_hi)); ++e) {
    const double x = kLeft + (e - x_lo) / (x_hi - x_lo) * plot_w;
    out += "<text x=\"" + coord(x) + "\" y=\"" + coord(kTop + plot_h + 18) +
           "\" text-anchor=\"middle\">1e" + std::to_string(e) + "</text>\n";
  }
  out += "<text x=\"" + coord(kLeft + plot_w / 2) + "\" y=\"" + coord(kHeight - 10) +
         "\" text-anchor=\"middle\">iteration</text>\n";

  std::size_t color = 0;
  for (const auto& [name, points] : series) {
    const char* stroke = kPalette[color % std::size(kPalette)];
    std::string polyline;
    for (const auto& [x, y] : points) {
      if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(y)) continue;
      polyline += coord(px(x)) + "," + coord(py(y)) + " ";
    }
    if (!polyline.empty()) polyline.pop_back();
    out += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1.5\" points=\"" +
           polyline + "\"/>\n";
    const double legend_y = kTop + 16.0 * static_cast<double>(color) + 10;
    out += "<line x1=\"" + coord(kWidth - kRight + 10) + "\" y1=\"" + coord(legend_y) + "\" x2=\"" +
           coord(kWidth - kRight + 30) + "\" y2=\"" + coord(legend_y) + "\" stroke=\"" + stroke +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + coord(kWidth - kRight + 36) + "\" y=\"" + coord(legend_y + 4) + "\">" +
           xml_escape(name) + "</text>\n";
    ++color;
  }
  out += "</svg>\n";
  return out;
}

void emit_plotdata(const std::map<std::string, std::vector<AggregateRow>>& aggregates,
                   const std::filesystem::path& dir, bool svg) {
  for (std::string_view metric : kPlotMetrics) {
    std::map<std::string, Series> series;
    for (const auto& [name, rows] : aggregates) {
      Series& points = series[name];
      for (const AggregateRow& row : rows) {
        points.emplace_back(static_cast<double>(row.mean.t), metric_value(row.mean, metric));
      }
    }
    const std::string stem(metric);
    write_text_file(dir / (stem + ".csv"), plot_long_csv(series));
    if (svg) write_text_file(dir / (stem + ".svg"), plot_svg(series, metric));
  }
}

}  // namespace ppdtd
