#include "flap/experiment/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flap::experiment {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& context) {
  if (s == "nan") return std::nan("");
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw std::runtime_error("metrics: bad number '" + s + "' " + context);
  }
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
  std::ostringstream out;
  out << r.epoch << "," << r.seed << "," << r.method << "," << fmt(r.success_rate) << ","
      << fmt(r.value_loss) << "," << fmt(r.q_loss) << "," << fmt(r.policy_loss) << ","
      << fmt(r.mean_kl) << "," << fmt(r.plan_cost);
  return out.str();
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("metrics: cannot write " + path);
  out << kMetricsHeader << "\n";
  for (const auto& r : rows) out << format_metrics_row(r) << "\n";
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics: empty file " + path);
  if (line != kMetricsHeader) {
    throw std::runtime_error("metrics: unexpected header at line 1 of " + path);
  }
  std::vector<MetricsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) {
      throw std::runtime_error("metrics: parse error at line " + std::to_string(line_no) + " of " +
                               path);
    }
    const std::string ctx = "at line " + std::to_string(line_no);
    MetricsRow r;
    r.epoch = static_cast<int>(parse_double(cells[0], ctx));
    r.seed = static_cast<std::uint64_t>(parse_double(cells[1], ctx));
    r.method = cells[2];
    r.success_rate = parse_double(cells[3], ctx);
    r.value_loss = parse_double(cells[4], ctx);
    r.q_loss = parse_double(cells[5], ctx);
    r.policy_loss = parse_double(cells[6], ctx);
    r.mean_kl = parse_double(cells[7], ctx);
    r.plan_cost = parse_double(cells[8], ctx);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace flap::experiment
