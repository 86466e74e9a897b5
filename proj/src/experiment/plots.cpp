#include "flap/experiment/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "flap/core/rng.hpp"

namespace flap::experiment {

namespace {

struct Series {
  std::vector<int> epochs;
  std::vector<double> mean;
  std::vector<double> std;
};

Series aggregate(const std::vector<MetricsRow>& rows, const std::string& method) {
  std::map<int, std::vector<double>> by_epoch;
  for (const auto& r : rows) {
    if (r.method == method) by_epoch[r.epoch].push_back(r.success_rate);
  }
  Series s;
  for (const auto& [epoch, vals] : by_epoch) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    if (vals.size() > 1) {
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(vals.size() - 1);
    }
    s.epochs.push_back(epoch);
    s.mean.push_back(mean);
    s.std.push_back(std::sqrt(var));
  }
  return s;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

void plot_success_curves(const std::vector<MetricsRow>& rows, const std::string& svg_path) {
  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }

  const double W = 640, H = 420;
  const double ml = 60, mr = 20, mt = 30, mb = 50;
  int max_epoch = 1;
  for (const auto& r : rows) max_epoch = std::max(max_epoch, r.epoch);

  auto sx = [&](double epoch) { return ml + (W - ml - mr) * epoch / max_epoch; };
  auto sy = [&](double rate) { return H - mb - (H - mt - mb) * rate; };

  std::ofstream out(svg_path, std::ios::trunc);
  if (!out) throw std::runtime_error("plot: cannot write " + svg_path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<rect width='" << W << "' height='" << H << "' fill='white'/>\n";
  // axes
  out << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
      << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double rate = i / 5.0;
    out << "<text x='" << ml - 8 << "' y='" << sy(rate) + 4
        << "' font-size='11' text-anchor='end'>" << rate << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << sy(rate) << "' x2='" << W - mr << "' y2='" << sy(rate)
        << "' stroke='#dddddd'/>\n";
  }
  out << "<text x='" << (W / 2) << "' y='" << H - 12
      << "' font-size='12' text-anchor='middle'>fine-tuning epoch</text>\n";
  out << "<text x='16' y='" << (H / 2)
      << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 " << (H / 2)
      << ")'>success rate</text>\n";

  int color_idx = 0;
  for (const auto& method : methods) {
    const Series s = aggregate(rows, method);
    if (s.epochs.empty()) continue;
    const char* color = kColors[color_idx % 5];

    // shaded +-1 std band
    std::ostringstream band;
    for (std::size_t i = 0; i < s.epochs.size(); ++i) {
      band << sx(s.epochs[i]) << "," << sy(std::min(1.0, s.mean[i] + s.std[i])) << " ";
    }
    for (std::size_t i = s.epochs.size(); i-- > 0;) {
      band << sx(s.epochs[i]) << "," << sy(std::max(0.0, s.mean[i] - s.std[i])) << " ";
    }
    out << "<polygon points='" << band.str() << "' fill='" << color
        << "' opacity='0.15' stroke='none'/>\n";

    std::ostringstream line;
    for (std::size_t i = 0; i < s.epochs.size(); ++i) {
      line << sx(s.epochs[i]) << "," << sy(s.mean[i]) << " ";
    }
    out << "<polyline points='" << line.str() << "' fill='none' stroke='" << color
        << "' stroke-width='2'/>\n";

    out << "<text x='" << W - mr - 6 << "' y='" << mt + 16 * color_idx + 10
        << "' font-size='12' text-anchor='end' fill='" << color << "'>" << method << "</text>\n";
    ++color_idx;
  }
  out << "</svg>\n";
}

void dump_latents(const data::TrajectoryBuffer& trajs, const enc::StateEncoder& encoder,
                  std::size_t n_samples, std::uint64_t seed, const std::string& csv_path) {
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw std::runtime_error("dump_latents: cannot write " + csv_path);
  out << "scene_id,t";
  for (int i = 0; i < encoder.z_dim(); ++i) out << ",z" << i;
  out << "\n";
  core::Rng rng(seed);
  for (std::size_t i = 0; i < n_samples && !trajs.empty(); ++i) {
    const data::Trajectory& tr = trajs[rng.uniform_index(trajs.size())];
    const std::size_t t = rng.uniform_index(tr.observations.size());
    const std::vector<float> z = encoder.encode_mean(tr.observations[t]);
    out << tr.scene_id << "," << t;
    for (float v : z) out << "," << v;
    out << "\n";
  }
}

}  // namespace flap::experiment
