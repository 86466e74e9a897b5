#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flap::experiment {

inline constexpr const char* kMetricsHeader =
    "epoch,seed,method,success_rate,value_loss,q_loss,policy_loss,mean_kl,plan_cost";

struct MetricsRow {
  int epoch = 0;
  std::uint64_t seed = 0;
  std::string method;
  double success_rate = 0.0;
  double value_loss = 0.0;
  double q_loss = 0.0;
  double policy_loss = 0.0;
  double mean_kl = 0.0;
  double plan_cost = 0.0;
};

std::string format_metrics_row(const MetricsRow& row);
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

// Throws std::runtime_error naming the offending line on malformed input.
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace flap::experiment
