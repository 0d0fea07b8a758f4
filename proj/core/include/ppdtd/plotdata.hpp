#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ppdtd/experiment.hpp"

namespace ppdtd {

using Series = std::vector<std::pair<double, double>>;

/// Metrics emitted as plot data, one file per metric.
inline constexpr std::string_view kPlotMetrics[] = {"consensus_error", "td_error_mean_abs",
                                                    "optimality_gap", "lyapunov"};

double metric_value(const MetricsRow& row, std::string_view metric);

/// Long format "iteration,series,value", series in map order.
std::string plot_long_csv(const std::map<std::string, Series>& series);

/// Line chart with log-scaled axes; non-positive points are dropped.
std::string plot_svg(const std::map<std::string, Series>& series, std::string_view title);

/// Writes plots/<metric>.csv (and .svg when requested) under `dir`.
void emit_plotdata(const std::map<std::string, std::vector<AggregateRow>>& aggregates,
                   const std::filesystem::path& dir, bool svg);

}  // namespace ppdtd
