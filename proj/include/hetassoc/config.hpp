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

// Domain types of the association model and the JSON configuration loader.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hetassoc/errors.hpp"

namespace hetassoc {

inline constexpr std::string_view kVersion = "0.1.0";

enum class SharingScope { network_wide, per_system };

inline std::string_view to_string(SharingScope scope) {
  return scope == SharingScope::network_wide ? "network_wide" : "per_system";
}

inline SharingScope parse_sharing_scope(std::string_view text) {
  if (text == "network_wide" || text == "network") return SharingScope::network_wide;
  if (text == "per_system" || text == "system") return SharingScope::per_system;
  throw ParseError("unknown sharing_scope '" + std::string(text) +
                   "' (expected network_wide or per_system)");
}

struct Thresholds {
  double low = 0.3;
  double high = 0.7;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// A problem instance: S systems, N radio classes, the peak-rate matrix and
// the traffic description. Indices are 0-based throughout the library.
struct NetworkConfig {
  std::vector<std::string> system_names;
  std::vector<std::string> class_names;
  std::vector<std::vector<double>> peak_rate;  // [class][system], Mbps
  double t_min = 1.0;                          // Mbps
  double t_max = 2.0;                          // Mbps
  std::vector<double> arrival_rate;            // [class], calls/s
  double service_rate = 1.0;                   // 1/s
  // gain(k) for k = 1..size(); the last entry extends to larger k. Empty
  // means the constant 1.0.
  std::vector<double> scheduler_gain;
  SharingScope sharing_scope = SharingScope::per_system;
  // Broadcast thresholds per system, as shipped with the instance.
  std::vector<Thresholds> thresholds;

  int num_systems() const { return static_cast<int>(system_names.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  double gain(int k) const {
    if (scheduler_gain.empty() || k <= 0) return 1.0;
    const auto idx = static_cast<std::size_t>(k - 1);
    return idx < scheduler_gain.size() ? scheduler_gain[idx] : scheduler_gain.back();
  }

  double total_arrival_rate() const {
    return std::accumulate(arrival_rate.begin(), arrival_rate.end(), 0.0);
  }

  // Offered traffic in Erlangs, summed over classes.
  double offered_load() const { return total_arrival_rate() / service_rate; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// Throws ValidationError naming the first violated invariant.
inline void validate(const NetworkConfig& cfg) {
  const auto fail = [](const std::string& what) { throw ValidationError(what); };
  const int S = cfg.num_systems();
  const int N = cfg.num_classes();
  if (S < 1) fail("at least one system is required");
  if (N < 1) fail("at least one radio class is required");
  if (!(cfg.t_min > 0.0)) fail("t_min must be positive");
  if (!(cfg.t_max > 0.0)) fail("t_max must be positive");
  if (cfg.t_min > cfg.t_max) fail("t_min exceeds t_max");
  if (static_cast<int>(cfg.peak_rate.size()) != N ||
      static_cast<int>(cfg.arrival_rate.size()) != N)
    fail("per-class arrays must have one entry per radio class");
  for (int n = 0; n < N; ++n) {
    if (static_cast<int>(cfg.peak_rate[n].size()) != S)
      fail("class '" + cfg.class_names[n] + "' must list one peak rate per system");
    for (double d : cfg.peak_rate[n])
      if (!(d > 0.0) || !std::isfinite(d)) fail("peak rates must be positive");
    if (!(cfg.arrival_rate[n] >= 0.0) || !std::isfinite(cfg.arrival_rate[n]))
      fail("arrival rates must be non-negative");
  }
  if (!(cfg.total_arrival_rate() > 0.0)) fail("no traffic");
  if (!(cfg.service_rate > 0.0) || !std::isfinite(cfg.service_rate))
    fail("service_rate must be positive");
  for (std::size_t i = 0; i < cfg.scheduler_gain.size(); ++i) {
    if (!(cfg.scheduler_gain[i] > 0.0)) fail("scheduler_gain entries must be positive");
    if (i > 0) {
      const double prev = cfg.scheduler_gain[i - 1] / static_cast<double>(i);
      const double cur = cfg.scheduler_gain[i] / static_cast<double>(i + 1);
      if (cur > prev * (1.0 + 1e-12))
        fail("scheduler_gain[k]/k must be non-increasing in k");
    }
  }
  if (static_cast<int>(cfg.thresholds.size()) != S)
    fail("each system needs a [low, high] threshold pair");
  for (const auto& th : cfg.thresholds)
    if (!(th.low >= 0.0 && th.low <= th.high && th.high <= 1.0))
      fail("thresholds must satisfy 0 <= low <= high <= 1");
}

inline nlohmann::json to_json(const NetworkConfig& cfg) {
  nlohmann::json doc;
  auto systems = nlohmann::json::array();
  for (int s = 0; s < cfg.num_systems(); ++s) {
    const Thresholds th = s < static_cast<int>(cfg.thresholds.size()) ? cfg.thresholds[s]
                                                                      : Thresholds{};
    systems.push_back({{"name", cfg.system_names[s]}, {"thresholds", {th.low, th.high}}});
  }
  auto classes = nlohmann::json::array();
  for (int n = 0; n < cfg.num_classes(); ++n)
    classes.push_back({{"name", cfg.class_names[n]},
                       {"arrival_rate", cfg.arrival_rate[n]},
                       {"peak_rates", cfg.peak_rate[n]}});
  doc["systems"] = systems;
  doc["classes"] = classes;
  doc["t_min"] = cfg.t_min;
  doc["t_max"] = cfg.t_max;
  doc["service_rate"] = cfg.service_rate;
  if (!cfg.scheduler_gain.empty()) doc["scheduler_gain"] = cfg.scheduler_gain;
  doc["sharing_scope"] = std::string(to_string(cfg.sharing_scope));
  return doc;
}

inline std::string serialize(const NetworkConfig& cfg, int indent = 2) {
  return to_json(cfg).dump(indent);
}

namespace detail {

template <typename T>
T required(const nlohmann::json& obj, const char* key, const char* where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(std::string("missing key '") + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("key '") + key + "' in " + where + " has the wrong type");
  }
}

}  // namespace detail

inline NetworkConfig config_from_json(const nlohmann::json& doc) {
  using detail::required;
  if (!doc.is_object()) throw ParseError("configuration must be a JSON object");
  NetworkConfig cfg;

  const auto systems = required<nlohmann::json>(doc, "systems", "document");
  if (!systems.is_array()) throw ParseError("'systems' must be an array");
  for (const auto& sys : systems) {
    cfg.system_names.push_back(required<std::string>(sys, "name", "system"));
    const auto th = required<std::vector<double>>(sys, "thresholds", "system");
    if (th.size() != 2) throw ParseError("system thresholds must be a [low, high] pair");
    cfg.thresholds.push_back({th[0], th[1]});
  }

  const auto classes = required<nlohmann::json>(doc, "classes", "document");
  if (!classes.is_array()) throw ParseError("'classes' must be an array");
  for (const auto& cls : classes) {
    cfg.class_names.push_back(required<std::string>(cls, "name", "class"));
    cfg.arrival_rate.push_back(required<double>(cls, "arrival_rate", "class"));
    cfg.peak_rate.push_back(required<std::vector<double>>(cls, "peak_rates", "class"));
  }

  cfg.t_min = required<double>(doc, "t_min", "document");
  cfg.t_max = required<double>(doc, "t_max", "document");
  cfg.service_rate = required<double>(doc, "service_rate", "document");
  if (doc.contains("scheduler_gain"))
    cfg.scheduler_gain = required<std::vector<double>>(doc, "scheduler_gain", "document");
  if (doc.contains("sharing_scope"))
    cfg.sharing_scope =
        parse_sharing_scope(required<std::string>(doc, "sharing_scope", "document"));

  validate(cfg);
  return cfg;
}

// Parses and validates a JSON configuration document.
inline NetworkConfig load_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed configuration: ") + e.what());
  }
  return config_from_json(doc);
}

inline NetworkConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open configuration file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

// Rescales the arrival vector so the summed offered load is `erlangs`,
// keeping the configured split across classes.
inline NetworkConfig with_offered_load(NetworkConfig cfg, double erlangs) {
  if (!(erlangs > 0.0)) throw ValidationError("offered load must be positive");
  const double scale = erlangs * cfg.service_rate / cfg.total_arrival_rate();
  for (double& rate : cfg.arrival_rate) rate *= scale;
  return cfg;
}

// Occupancy vector M; entry (n, s) is the number of class-n users in
// system s. Storage is system-major: (M_1^1..M_N^1, ..., M_1^S..M_N^S).
class NetworkState {
 public:
  NetworkState() = default;
  NetworkState(int num_classes, int num_systems)
      : classes_(num_classes), systems_(num_systems),
        counts_(static_cast<std::size_t>(num_classes * num_systems), 0) {}

  int num_classes() const { return classes_; }
  int num_systems() const { return systems_; }

  int count(int n, int s) const { return counts_[slot(n, s)]; }
  void set(int n, int s, int value) { counts_[slot(n, s)] = value; }

  NetworkState with_arrival(int n, int s) const {
    NetworkState out = *this;
    ++out.counts_[slot(n, s)];
    return out;
  }
  NetworkState with_departure(int n, int s) const {
    NetworkState out = *this;
    --out.counts_[slot(n, s)];
    return out;
  }

  int system_total(int s) const {
    int k = 0;
    for (int n = 0; n < classes_; ++n) k += count(n, s);
    return k;
  }
  int total() const { return std::accumulate(counts_.begin(), counts_.end(), 0); }

  const std::vector<int>& occupancy() const { return counts_; }

  std::string to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(counts_[i]);
    }
    return out + ")";
  }

  friend bool operator==(const NetworkState&, const NetworkState&) = default;
  friend auto operator<=>(const NetworkState& a, const NetworkState& b) {
    return a.counts_ <=> b.counts_;
  }

 private:
  std::size_t slot(int n, int s) const { return static_cast<std::size_t>(s * classes_ + n); }

  int classes_ = 0;
  int systems_ = 0;
  std::vector<int> counts_;
};

// N x L table of system choices, indexed by (class, load label).
class Policy {
 public:
  Policy() = default;
  Policy(int num_classes, int num_labels, int fill = 0)
      : classes_(num_classes), labels_(num_labels),
        choice_(static_cast<std::size_t>(num_classes * num_labels), fill) {}

  int num_classes() const { return classes_; }
  int num_labels() const { return labels_; }

  int at(int n, int l) const { return choice_[static_cast<std::size_t>(n * labels_ + l)]; }
  void set(int n, int l, int s) { choice_[static_cast<std::size_t>(n * labels_ + l)] = s; }

  const std::vector<int>& entries() const { return choice_; }

  // Rows separated by '/', entries are 1-based system indices (S <= 9).
  std::string to_string() const {
    std::string out;
    for (int n = 0; n < classes_; ++n) {
      if (n) out += '/';
      for (int l = 0; l < labels_; ++l) out += std::to_string(at(n, l) + 1);
    }
    return out;
  }

  friend bool operator==(const Policy& a, const Policy& b) {
    return a.classes_ == b.classes_ && a.labels_ == b.labels_ && a.choice_ == b.choice_;
  }
  friend auto operator<=>(const Policy& a, const Policy& b) { return a.choice_ <=> b.choice_; }

 private:
  int classes_ = 0;
  int labels_ = 0;
  std::vector<int> choice_;
};

// Inverse of Policy::to_string for systems 1..9.
inline Policy parse_policy(std::string_view text, int num_classes, int num_labels,
                           int num_systems) {
  Policy p(num_classes, num_labels);
  int n = 0;
  int l = 0;
  for (char c : text) {
    if (c == '/') {
      if (l != num_labels) throw ParseError("policy row has the wrong number of labels");
      ++n;
      l = 0;
      continue;
    }
    if (c < '1' || c > '9') throw ParseError("policy entries must be digits 1..9");
    const int s = c - '1';
    if (s >= num_systems) throw ParseError("policy entry names a system that does not exist");
    if (n >= num_classes || l >= num_labels) throw ParseError("policy string is too long");
    p.set(n, l++, s);
  }
  if (n != num_classes - 1 || l != num_labels)
    throw ParseError("policy must have " + std::to_string(num_classes) + " rows of " +
                     std::to_string(num_labels) + " entries");
  return p;
}

}  // namespace hetassoc
