// Copyright 2026 The hetassoc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Output helpers: provenance headers, CSV/JSON writers for solver results
// and a minimal SVG line chart.

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hetassoc/config.hpp"
#include "hetassoc/ctmc.hpp"
#include "hetassoc/load_aggregation.hpp"
#include "hetassoc/monte_carlo.hpp"
#include "hetassoc/policy_game.hpp"
#include "hetassoc/threshold_control.hpp"

namespace hetassoc {

// Run metadata embedded in every artifact.
struct Provenance {
  std::string command;
  nlohmann::json config;  // fully resolved instance
  nlohmann::json parameters = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"tool", "hetassoc"},
            {"version", std::string(kVersion)},
            {"command", command},
            {"parameters", parameters},
            {"config", config}};
  }
};

// "# key: value" comment lines heading a CSV file.
inline void write_csv_provenance(std::ostream& os, const Provenance& prov) {
  os << "# tool: hetassoc " << kVersion << '\n';
  os << "# command: " << prov.command << '\n';
  os << "# parameters: " << prov.parameters.dump() << '\n';
  os << "# config: " << prov.config.dump() << '\n';
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline void write_steady_state(std::ostream& os, const StateSpace& space, const SteadyState& ss,
                               const std::vector<int>& labels, int num_systems) {
  os << "state_id,state,probability,label\n";
  for (int id = 0; id < space.size(); ++id)
    os << id << ",\"" << space.state(id).to_string() << "\","
       << format_double(ss.pi[static_cast<std::size_t>(id)]) << ','
       << label_from_index(labels[static_cast<std::size_t>(id)], num_systems).to_string() << '\n';
}

// One row per (class, label): mass, blocking, chosen system and U_nl^s.
inline void write_policy_table(std::ostream& os, const StateSpace& space,
                               const PolicyEvaluation& ev) {
  const auto& cfg = space.config();
  os << "class,label,mass,empty,blocking,chosen";
  for (int s = 0; s < ev.num_systems; ++s) os << ",U_" << cfg.system_names[s];
  os << '\n';
  for (int n = 0; n < ev.num_classes; ++n)
    for (int l = 0; l < ev.num_labels; ++l) {
      os << cfg.class_names[n] << ',' << label_from_index(l, ev.num_systems).to_string() << ','
         << format_double(ev.label_mass[static_cast<std::size_t>(l)]) << ','
         << (ev.empty_label[static_cast<std::size_t>(l)] ? 1 : 0) << ','
         << format_double(ev.blocking[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)])
         << ',' << (ev.policy ? cfg.system_names[ev.policy->at(n, l)] : std::string("-"));
      for (int s = 0; s < ev.num_systems; ++s)
        os << ',' << format_double(ev.individual.empty() ? std::nan("")
                                                         : ev.individual_utility(n, l, s));
      os << '\n';
    }
}

inline nlohmann::json evaluation_json(const StateSpace& space, const PolicyEvaluation& ev) {
  const auto& cfg = space.config();
  nlohmann::json j;
  j["rule"] = ev.rule;
  if (ev.policy) {
    j["policy"] = ev.policy->to_string();
    nlohmann::json table = nlohmann::json::object();
    for (int n = 0; n < ev.num_classes; ++n) {
      nlohmann::json row = nlohmann::json::object();
      for (int l = 0; l < ev.num_labels; ++l)
        row[label_from_index(l, ev.num_systems).to_string()] =
            cfg.system_names[ev.policy->at(n, l)];
      table[cfg.class_names[n]] = row;
    }
    j["choices"] = table;
  }
  j["global_utility_mbit"] = json_number(ev.global_utility);
  j["overall_blocking"] = json_number(ev.overall_blocking);
  nlohmann::json cb = nlohmann::json::object();
  for (int n = 0; n < ev.num_classes; ++n)
    cb[cfg.class_names[n]] = json_number(ev.class_blocking[static_cast<std::size_t>(n)]);
  j["class_blocking"] = cb;
  std::vector<std::string> empty;
  for (int l = 0; l < ev.num_labels; ++l)
    if (ev.empty_label[static_cast<std::size_t>(l)])
      empty.push_back(label_from_index(l, ev.num_systems).to_string());
  j["empty_labels"] = empty;
  return j;
}

// Minimal multi-series line chart.
struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline void write_svg_chart(std::ostream& os, const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<Series>& series,
                            const Provenance* prov = nullptr) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  y0 = std::min(y0, 0.0);
  if (y1 == y0) y1 = y0 + 1;
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f"};

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (prov) os << "<!-- " << prov->to_json().dump() << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << format_double(std::round(xv * 1000) / 1000) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
       << format_double(std::round(yv * 1000) / 1000) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
     << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" fill=\"" << color
       << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace hetassoc
