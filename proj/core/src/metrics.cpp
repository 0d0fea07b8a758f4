#include "ppdtd/metrics.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ppdtd/errors.hpp"

namespace ppdtd {

std::string_view to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::kCompleted:
      return "completed";
    case RunStatus::kDiverged:
      return "diverged";
    case RunStatus::kCapped:
      return "capped";
  }
  return "unknown";
}

std::string_view to_string(TdErrorKind kind) noexcept {
  return kind == TdErrorKind::kValueError ? "value_error" : "bellman_residual";
}

double consensus_error(const AgentMatrix& Theta, const Eigen::VectorXd& u) {
  const Eigen::VectorXd theta_bar = weighted_average(Theta, u);
  double total = 0.0;
  for (Eigen::Index i = 0; i < Theta.rows(); ++i) {
    total += (Theta.row(i).transpose() - theta_bar).norm();
  }
  return total / static_cast<double>(Theta.rows());
}

double td_error_mean_abs(const AgentMatrix& Theta, const FeatureMap& phi, const ExactSolution& exact,
                         const PolicyChain& chain, TdErrorKind kind) {
  const Eigen::MatrixXd& Phi = phi.matrix();
  const Eigen::Index n = Theta.rows();
  const Eigen::Index S = Phi.rows();
  double total = 0.0;
  if (kind == TdErrorKind::kValueError) {
    const Eigen::VectorXd target = Phi * exact.theta_star;
    for (Eigen::Index i = 0; i < n; ++i) {
      total += (Phi * Theta.row(i).transpose() - target).cwiseAbs().sum();
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd values = Phi * Theta.row(i).transpose();
      total += (chain.r_mean + exact.gamma * (chain.P * values) - values).cwiseAbs().sum();
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(S));
}

std::string format_number(double value) {
  std::array<char, 64> buffer{};
  const auto result =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value, std::chars_format::fixed, 12);
  if (result.ec != std::errc{}) {
    // Only magnitudes beyond ~1e50 overflow the buffer; fall back to scientific.
    const auto sci = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value,
                                   std::chars_format::scientific, 12);
    return std::string(buffer.data(), sci.ptr);
  }
  return std::string(buffer.data(), result.ptr);
}

std::string format_csv(const std::vector<MetricsRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const MetricsRow& row : rows) {
    out += std::to_string(row.t);
    for (double value : {row.alpha, row.beta, row.consensus_error, row.td_error_mean_abs,
                         row.optimality_gap, row.lyapunov, row.V_e, row.V_track, row.V_consensus,
                         row.V_gap}) {
      out += ',';
      out += format_number(value);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoFailure("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) throw IoFailure("write failed for " + path.string());
}

void write_csv(const RunRecord& record, const std::filesystem::path& path) {
  write_text_file(path, format_csv(record.rows));
}

namespace {

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc{} || result.ptr != field.data() + field.size()) {
    throw InvalidArgument("bad number '" + std::string(field) + "' on CSV line " + std::to_string(line_no));
  }
  return value;
}

}  // namespace

std::vector<MetricsRow> parse_csv(std::string_view text) {
  std::vector<MetricsRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kCsvHeader) throw InvalidArgument("unexpected CSV header");
      continue;
    }
    if (line.empty()) continue;

    std::array<double, 11> values{};
    std::size_t field = 0, start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view token = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
      if (field >= values.size()) throw InvalidArgument("too many CSV fields on line " + std::to_string(line_no));
      values[field++] = parse_double(token, line_no);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (field != values.size()) throw InvalidArgument("too few CSV fields on line " + std::to_string(line_no));
    MetricsRow row;
    row.t = static_cast<std::size_t>(values[0]);
    row.alpha = values[1];
    row.beta = values[2];
    row.consensus_error = values[3];
    row.td_error_mean_abs = values[4];
    row.optimality_gap = values[5];
    row.lyapunov = values[6];
    row.V_e = values[7];
    row.V_track = values[8];
    row.V_consensus = values[9];
    row.V_gap = values[10];
    rows.push_back(row);
  }
  return rows;
}

std::vector<MetricsRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

}  // namespace ppdtd
