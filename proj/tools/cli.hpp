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

// Batch front end. Kept in a header so the test suite can drive run()
// in-process.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hetassoc/hetassoc.hpp"

namespace hetassoc::cli {

struct Args {
  std::string config;
  double erlangs = 0.0;  // 0 keeps the configured arrival rates
  std::string sharing;
  bool strict = false;
  int jobs = 0;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string rule = "peak_rate";
  std::string policy;
  std::string deviation = "redirect";
  std::string mode = "auto";
  int restarts = 64;
  std::uint64_t events = 1000000;
  int batches = 20;
  double confidence = 0.99;
  std::string traffic = "1:10:1";
  std::string analyses = "nash,baselines";
  std::string schemes;
  double grid_step = 0.1;
  std::string selection = "best_utility";
  bool svg = false;
  bool trace = false;
  bool symmetric = false;
};

// Traffic levels "A:B:STEP" (inclusive) or a single value "A".
inline std::vector<double> parse_traffic(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("bad traffic value '" + tok + "'");
    }
  }
  if (parts.size() == 1) parts = {parts[0], parts[0], 1.0};
  if (parts.size() != 3) throw ParseError("traffic must be A:B:STEP or a single value");
  const double a = parts[0], b = parts[1], step = parts[2];
  if (!(a > 0.0) || b < a || !(step > 0.0))
    throw ValidationError("traffic range needs 0 < A <= B and STEP > 0");
  std::vector<double> levels;
  for (int i = 0;; ++i) {
    const double v = a + i * step;
    if (v > b + 1e-9 * std::max(1.0, b)) break;
    levels.push_back(std::round(v * 1e9) / 1e9);
  }
  return levels;
}

inline std::set<std::string> parse_analyses(const std::string& text) {
  static const std::set<std::string> known{"nash", "optimal", "baselines", "control"};
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) {
      if (!known.contains(tok)) throw ParseError("unknown analysis '" + tok + "'");
      out.insert(tok);
    }
  if (out.empty()) throw ParseError("no analyses selected");
  return out;
}

// Threshold vectors compared by `sweep --analyses control` when --schemes
// is not given.
inline constexpr const char* kDefaultSweepSchemes =
    "0.3,0.7,0.3,0.7;0.1,0.5,0.1,0.5;0.5,0.9,0.5,0.9";

class Runner {
 public:
  Runner(Args args, std::string command, std::ostream& out)
      : args_(std::move(args)), command_(std::move(command)), out_(out) {}

  int dispatch() {
    if (command_ == "validate") return validate_cmd();
    if (command_ == "enumerate") return enumerate_cmd();
    if (command_ == "steady") return steady_cmd();
    if (command_ == "utility") return utility_cmd();
    if (command_ == "nash") return nash_cmd();
    if (command_ == "optimal") return optimal_cmd();
    if (command_ == "baseline") return baseline_cmd();
    if (command_ == "control") return control_cmd();
    if (command_ == "sweep") return sweep_cmd();
    if (command_ == "simulate") return simulate_cmd();
    throw ParseError("unknown subcommand '" + command_ + "'");
  }

 private:
  Args args_;
  std::string command_;
  std::ostream& out_;
  NetworkConfig base_;
  NetworkConfig cfg_;

  void load() {
    base_ = load_config_file(args_.config);
    if (!args_.sharing.empty()) base_.sharing_scope = parse_sharing_scope(args_.sharing);
    cfg_ = args_.erlangs > 0.0 ? with_offered_load(base_, args_.erlangs) : base_;
    validate(cfg_);
  }

  GameOptions game_options() const {
    GameOptions g;
    g.admission = args_.strict ? Admission::strict : Admission::redirect;
    if (args_.deviation == "exclude")
      g.deviation = DeviationPayoff::exclude;
    else if (args_.deviation != "redirect")
      throw ParseError("unknown deviation payoff '" + args_.deviation + "'");
    return g;
  }

  SearchOptions search_options() const {
    SearchOptions s;
    if (args_.mode == "auto")
      s.mode = SearchMode::automatic;
    else if (args_.mode == "exhaustive")
      s.mode = SearchMode::exhaustive;
    else if (args_.mode == "best-response" || args_.mode == "best_response")
      s.mode = SearchMode::best_response;
    else
      throw ParseError("unknown search mode '" + args_.mode + "'");
    s.restarts = args_.restarts;
    s.seed = args_.seed;
    s.jobs = args_.jobs;
    s.trace = args_.trace;
    return s;
  }

  EquilibriumSelection selection() const {
    if (args_.selection == "best_utility") return EquilibriumSelection::best_utility;
    if (args_.selection == "worst_blocking") return EquilibriumSelection::worst_blocking;
    throw ParseError("unknown equilibrium selection '" + args_.selection + "'");
  }

  Provenance provenance(nlohmann::json params = nlohmann::json::object()) const {
    Provenance p;
    p.command = command_;
    params["strict_eq2"] = args_.strict;
    if (args_.erlangs > 0.0) params["erlangs"] = args_.erlangs;
    p.parameters = std::move(params);
    p.config = to_json(cfg_);
    return p;
  }

  std::filesystem::path out_path(const std::string& name) const {
    std::filesystem::create_directories(args_.out);
    return std::filesystem::path(args_.out) / name;
  }

  std::ofstream open(const std::string& name) const {
    const auto path = out_path(name);
    std::ofstream os(path);
    if (!os) throw Error("cannot write '" + path.string() + "'");
    return os;
  }

  void write_json(const std::string& name, const nlohmann::json& body,
                  const Provenance& prov) const {
    nlohmann::json doc = body;
    doc["provenance"] = prov.to_json();
    open(name) << doc.dump(2) << '\n';
  }

  // The rule named by --rule (and --policy for policy rules) together with
  // the label structure it is evaluated on.
  struct SelectedRule {
    AssignmentRule rule;
    std::vector<int> labels;
    int num_labels = 1;
  };

  SelectedRule selected_rule(const StateSpace& space) const {
    SelectedRule sel;
    if (args_.rule == "peak_rate") {
      sel.rule = PeakRateRule{};
      sel.labels.assign(static_cast<std::size_t>(space.size()), 0);
    } else if (args_.rule == "instantaneous_rate") {
      sel.rule = InstantaneousRateRule{};
      sel.labels.resize(static_cast<std::size_t>(space.size()));
      for (int id = 0; id < space.size(); ++id) sel.labels[static_cast<std::size_t>(id)] = id;
      sel.num_labels = space.size();
    } else if (args_.rule == "policy") {
      if (args_.policy.empty()) throw ParseError("--rule policy needs --policy");
      const auto scheme = AggregationScheme::from_config(cfg_);
      sel.num_labels = scheme.num_labels();
      sel.rule = PolicyRule{
          parse_policy(args_.policy, cfg_.num_classes(), sel.num_labels, cfg_.num_systems()),
          scheme};
      sel.labels = label_table(scheme, space);
    } else {
      throw ParseError("unknown rule '" + args_.rule + "'");
    }
    return sel;
  }

  nlohmann::json rule_params() const {
    nlohmann::json p{{"rule", args_.rule}};
    if (args_.rule == "policy") p["policy"] = args_.policy;
    return p;
  }

  int validate_cmd() {
    load();
    out_ << "ok: " << cfg_.num_systems() << " systems, " << cfg_.num_classes()
         << " classes, offered load " << format_double(cfg_.offered_load()) << " Erlangs\n";
    return 0;
  }

  int enumerate_cmd() {
    load();
    const auto space = enumerate(cfg_);
    auto os = open("states.csv");
    write_csv_provenance(os, provenance());
    write_state_table(os, space);
    out_ << "states: " << space.size() << '\n';
    return 0;
  }

  int steady_cmd() {
    load();
    const auto space = enumerate(cfg_);
    const auto sel = selected_rule(space);
    const auto ev =
        evaluate_rule(space, sel.rule, sel.labels, sel.num_labels, game_options(), false);
    const auto prov = provenance(rule_params());
    auto os = open("steady.csv");
    write_csv_provenance(os, prov);
    write_steady_state(os, space, ev.steady, label_table(AggregationScheme::from_config(cfg_), space),
                       cfg_.num_systems());
    auto summary = evaluation_json(space, ev);
    summary["residual"] = ev.steady.residual;
    summary["states"] = space.size();
    write_json("steady.json", summary, prov);
    out_ << "states: " << space.size() << "  blocking: " << format_double(ev.overall_blocking)
         << "  residual: " << format_double(ev.steady.residual) << '\n';
    return 0;
  }

  int utility_cmd() {
    load();
    const auto space = enumerate(cfg_);
    const auto sel = selected_rule(space);
    const auto options = game_options();
    const bool is_policy = std::holds_alternative<PolicyRule>(sel.rule);
    const auto ev =
        evaluate_rule(space, sel.rule, sel.labels, sel.num_labels, options, is_policy);
    const auto prov = provenance(rule_params());
    {
      auto os = open("volumes.csv");
      write_csv_provenance(os, prov);
      write_volumes(os, space, UtilityTable(space, AdmissionTable(space, sel.rule,
                                                                  options.admission, sel.labels)));
    }
    if (is_policy) {
      auto os = open("policy_table.csv");
      write_csv_provenance(os, prov);
      write_policy_table(os, space, ev);
    }
    write_json("utility.json", evaluation_json(space, ev), prov);
    out_ << "global utility: " << format_double(ev.global_utility)
         << " Mbit  blocking: " << format_double(ev.overall_blocking) << '\n';
    return 0;
  }

  nlohmann::json nash_json(const StateSpace& space, const NashResult& nash) const {
    nlohmann::json j;
    j["mode"] = nash.mode_used == SearchMode::exhaustive ? "exhaustive" : "best_response";
    j["policy_space"] = nash.policy_space;
    j["evaluations"] = nash.evaluations;
    j["converged_restarts"] = nash.converged_restarts;
    j["cycling_restarts"] = nash.cycling_restarts;
    auto list = nlohmann::json::array();
    for (const auto& ev : nash.equilibria) {
      auto e = evaluation_json(space, ev);
      e["max_regret"] = check_nash(ev, game_options().epsilon).max_regret;
      list.push_back(e);
    }
    j["equilibria"] = list;
    if (nash.equilibria.empty()) j["note"] = "no pure equilibrium found";
    return j;
  }

  int nash_cmd() {
    load();
    const auto space = enumerate(cfg_);
    const GameContext ctx(space, AggregationScheme::from_config(cfg_));
    const auto search = search_options();
    const auto nash = find_nash(ctx, game_options(), search);
    const auto prov = provenance({{"mode", args_.mode}, {"restarts", args_.restarts},
                                  {"seed", args_.seed}});
    write_json("nash.json", nash_json(space, nash), prov);
    {
      auto os = open("nash.csv");
      write_csv_provenance(os, prov);
      os << "policy,global_utility,overall_blocking\n";
      for (const auto& ev : nash.equilibria)
        os << ev.policy->to_string() << ',' << format_double(ev.global_utility) << ','
           << format_double(ev.overall_blocking) << '\n';
    }
    if (args_.trace) {
      auto os = open("best_response_trace.csv");
      write_csv_provenance(os, prov);
      os << "restart,class,label,from,to,payoff_from,payoff_to\n";
      for (const auto& st : nash.trace)
        os << st.restart << ',' << cfg_.class_names[st.n] << ','
           << label_from_index(st.l, cfg_.num_systems()).to_string() << ','
           << cfg_.system_names[st.from] << ',' << cfg_.system_names[st.to] << ','
           << format_double(st.payoff_from) << ',' << format_double(st.payoff_to) << '\n';
    }
    out_ << "equilibria: " << nash.equilibria.size() << " (of " << nash.policy_space
         << " canonical policies, "
         << (nash.mode_used == SearchMode::exhaustive ? "exhaustive" : "best response") << ")\n";
    if (nash.equilibria.empty()) out_ << "no pure equilibrium found\n";
    for (const auto& ev : nash.equilibria)
      out_ << "  " << ev.policy->to_string() << "  U=" << format_double(ev.global_utility)
           << "  b=" << format_double(ev.overall_blocking) << '\n';
    return 0;
  }

  int optimal_cmd() {
    load();
    const auto space = enumerate(cfg_);
    const GameContext ctx(space, AggregationScheme::from_config(cfg_));
    const auto result = optimal_policy(ctx, game_options(), search_options());
    const auto prov = provenance({{"mode", args_.mode}, {"restarts", args_.restarts},
                                  {"seed", args_.seed}});
    auto j = evaluation_json(space, result.best);
    j["exhaustive"] = result.exhaustive;
    j["policy_space"] = result.policy_space;
    j["evaluations"] = result.evaluations;
    auto ties = nlohmann::json::array();
    for (const auto& p : result.ties) ties.push_back(p.to_string());
    j["ties"] = ties;
    write_json("optimal.json", j, prov);
    {
      auto os = open("optimal_policy.csv");
      write_csv_provenance(os, prov);
      write_policy_table(os, space, result.best);
    }
    out_ << "optimal: " << result.best.policy->to_string()
         << "  U=" << format_double(result.best.global_utility)
         << "  b=" << format_double(result.best.overall_blocking)
         << (result.exhaustive ? "" : "  (local search)") << '\n';
    return 0;
  }

  int baseline_cmd() {
    load();
    const auto space = enumerate(cfg_);
    const auto prov = provenance();
    auto os = open("baselines.csv");
    write_csv_provenance(os, prov);
    os << "rule,global_utility,overall_blocking\n";
    nlohmann::json j = nlohmann::json::object();
    for (const auto which : {Baseline::peak_rate, Baseline::instantaneous_rate}) {
      const auto ev = evaluate_baseline(space, which, game_options());
      os << to_string(which) << ',' << format_double(ev.global_utility) << ','
         << format_double(ev.overall_blocking) << '\n';
      j[std::string(to_string(which))] = evaluation_json(space, ev);
      out_ << to_string(which) << ": U=" << format_double(ev.global_utility)
           << "  b=" << format_double(ev.overall_blocking) << '\n';
    }
    write_json("baselines.json", j, prov);
    return 0;
  }

  std::vector<AggregationScheme> control_grid() const {
    if (!args_.schemes.empty()) return parse_schemes(args_.schemes, cfg_.num_systems());
    return threshold_grid(cfg_.num_systems(), args_.grid_step, args_.symmetric);
  }

  static void write_outcome_row(std::ostream& os, double erlangs, const SchemeOutcome& o,
                                bool argmin) {
    os << format_double(erlangs) << ",\"" << o.scheme.to_string() << "\","
       << o.equilibrium_count << ',' << format_double(o.blocking) << ','
       << format_double(o.alternative_blocking) << ',' << format_double(o.utility) << ','
       << (o.selected ? o.selected->to_string() : std::string("-")) << ',' << (argmin ? 1 : 0)
       << '\n';
  }

  static constexpr const char* kOutcomeHeader =
      "erlangs,scheme,equilibria,blocking,alternative_blocking,utility,policy,argmin\n";

  nlohmann::json control_json(const ControlResult& r) const {
    nlohmann::json j;
    j["selection"] = std::string(to_string(r.selection));
    j["schemes"] = r.outcomes.size();
    if (r.best) {
      const auto& b = r.outcomes[*r.best];
      j["best"] = {{"scheme", b.scheme.to_string()},
                   {"blocking", b.blocking},
                   {"inverse_blocking", json_number(b.inverse_blocking)},
                   {"utility", b.utility},
                   {"policy", b.selected->to_string()}};
    } else {
      j["best"] = nullptr;
    }
    auto ties = nlohmann::json::array();
    for (auto i : r.ties) ties.push_back(r.outcomes[i].scheme.to_string());
    j["ties"] = ties;
    j["warnings"] = r.warnings;
    return j;
  }

  int control_cmd() {
    load();
    const auto space = enumerate(cfg_);
    const auto grid = control_grid();
    ControlOptions control;
    control.selection = selection();
    control.jobs = args_.jobs;
    const auto result = optimize_thresholds(space, grid, game_options(), search_options(), control);
    nlohmann::json params{{"schemes", grid.size()}, {"selection", args_.selection},
                          {"seed", args_.seed}};
    if (args_.schemes.empty()) {
      params["grid_step"] = args_.grid_step;
      params["symmetric"] = args_.symmetric;
    } else {
      params["scheme_list"] = args_.schemes;
    }
    const auto prov = provenance(params);
    auto os = open("control.csv");
    write_csv_provenance(os, prov);
    os << kOutcomeHeader;
    for (std::size_t i = 0; i < result.outcomes.size(); ++i)
      write_outcome_row(os, cfg_.offered_load(), result.outcomes[i],
                        std::find(result.ties.begin(), result.ties.end(), i) != result.ties.end());
    write_json("control.json", control_json(result), prov);
    if (result.best) {
      const auto& b = result.outcomes[*result.best];
      out_ << "best thresholds: " << b.scheme.to_string() << "  b=" << format_double(b.blocking)
           << "  (" << result.ties.size() << " tied, " << grid.size() << " evaluated)\n";
    } else {
      out_ << "no scheme has a pure equilibrium\n";
    }
    for (const auto& w : result.warnings) out_ << "warning: " << w << '\n';
    return 0;
  }

  struct SweepPoint {
    double erlangs = 0.0;
    std::optional<NashResult> nash;
    std::optional<OptimalResult> optimal;
    std::optional<PolicyEvaluation> peak;
    std::optional<PolicyEvaluation> instantaneous;
    std::optional<ControlResult> control;
  };

  int sweep_cmd() {
    load();
    const auto levels = parse_traffic(args_.traffic);
    const auto analyses = parse_analyses(args_.analyses);
    const auto game = game_options();
    auto search = search_options();
    const auto schemes = parse_schemes(
        args_.schemes.empty() ? std::string(kDefaultSweepSchemes) : args_.schemes,
        cfg_.num_systems());
    ControlOptions control;
    control.selection = selection();
    control.jobs = 1;
    // Parallelism goes to the traffic points; each point runs serially.
    search.jobs = 1;

    std::vector<SweepPoint> points(levels.size());
    parallel_for(levels.size(), args_.jobs, [&](std::size_t i) {
      SweepPoint& pt = points[i];
      pt.erlangs = levels[i];
      const auto cfg = with_offered_load(base_, levels[i]);
      const auto space = enumerate(cfg);
      const GameContext ctx(space, AggregationScheme::from_config(cfg));
      if (analyses.contains("nash")) pt.nash = find_nash(ctx, game, search);
      if (analyses.contains("optimal")) pt.optimal = optimal_policy(ctx, game, search);
      if (analyses.contains("baselines")) {
        pt.peak = evaluate_baseline(space, Baseline::peak_rate, game);
        pt.instantaneous = evaluate_baseline(space, Baseline::instantaneous_rate, game);
      }
      if (analyses.contains("control"))
        pt.control = optimize_thresholds(space, schemes, game, search, control);
    });

    nlohmann::json params{{"traffic", args_.traffic},
                          {"levels", levels},
                          {"analyses", std::vector<std::string>(analyses.begin(), analyses.end())},
                          {"seed", args_.seed},
                          {"restarts", args_.restarts},
                          {"mode", args_.mode}};
    if (analyses.contains("control")) {
      params["selection"] = args_.selection;
      nlohmann::json list = nlohmann::json::array();
      for (const auto& s : schemes) list.push_back(s.to_string());
      params["schemes"] = list;
    }
    cfg_ = base_;
    const auto prov = provenance(params);

    const bool utility_table =
        analyses.contains("nash") || analyses.contains("optimal") || analyses.contains("baselines");
    Series nash_s{"Nash hybrid", {}, {}}, opt_s{"optimal", {}, {}},
        peak_s{"peak rate", {}, {}}, inst_s{"instantaneous rate", {}, {}};
    if (utility_table) {
      auto os = open("utility_vs_traffic.csv");
      write_csv_provenance(os, prov);
      os << "erlangs";
      if (analyses.contains("nash"))
        os << ",nash_equilibria,nash_utility,nash_utility_min,nash_blocking,nash_policy";
      if (analyses.contains("optimal")) os << ",optimal_utility,optimal_blocking,optimal_policy";
      if (analyses.contains("baselines"))
        os << ",peak_rate_utility,peak_rate_blocking,instantaneous_rate_utility,"
              "instantaneous_rate_blocking";
      os << '\n';
      for (const auto& pt : points) {
        os << format_double(pt.erlangs);
        if (pt.nash) {
          const auto& eq = pt.nash->equilibria;
          double u = std::nan(""), u_min = std::nan(""), b = std::nan("");
          std::string pol = "-";
          if (!eq.empty()) {
            const auto& best = eq[select_equilibrium(eq, EquilibriumSelection::best_utility)];
            u = best.global_utility;
            b = best.overall_blocking;
            pol = best.policy->to_string();
            u_min = u;
            for (const auto& e : eq) u_min = std::min(u_min, e.global_utility);
          }
          os << ',' << eq.size() << ',' << format_double(u) << ',' << format_double(u_min) << ','
             << format_double(b) << ',' << pol;
          nash_s.x.push_back(pt.erlangs);
          nash_s.y.push_back(u);
        }
        if (pt.optimal) {
          os << ',' << format_double(pt.optimal->best.global_utility) << ','
             << format_double(pt.optimal->best.overall_blocking) << ','
             << pt.optimal->best.policy->to_string();
          opt_s.x.push_back(pt.erlangs);
          opt_s.y.push_back(pt.optimal->best.global_utility);
        }
        if (pt.peak) {
          os << ',' << format_double(pt.peak->global_utility) << ','
             << format_double(pt.peak->overall_blocking) << ','
             << format_double(pt.instantaneous->global_utility) << ','
             << format_double(pt.instantaneous->overall_blocking);
          peak_s.x.push_back(pt.erlangs);
          peak_s.y.push_back(pt.peak->global_utility);
          inst_s.x.push_back(pt.erlangs);
          inst_s.y.push_back(pt.instantaneous->global_utility);
        }
        os << '\n';
      }
      if (args_.svg) {
        std::vector<Series> series;
        for (auto* s : {&nash_s, &opt_s, &peak_s, &inst_s})
          if (!s->x.empty()) series.push_back(*s);
        auto svg = open("utility_vs_traffic.svg");
        write_svg_chart(svg, "Global utility vs offered traffic", "offered traffic (Erlangs)",
                        "global utility (Mbit)", series, &prov);
      }
    }

    if (analyses.contains("control")) {
      auto os = open("blocking_vs_traffic.csv");
      write_csv_provenance(os, prov);
      os << kOutcomeHeader;
      std::vector<Series> series(schemes.size());
      Series best_s{"argmin", {}, {}};
      for (std::size_t k = 0; k < schemes.size(); ++k) series[k].name = schemes[k].to_string();
      for (const auto& pt : points) {
        const auto& r = *pt.control;
        for (std::size_t k = 0; k < r.outcomes.size(); ++k) {
          const bool tied = std::find(r.ties.begin(), r.ties.end(), k) != r.ties.end();
          write_outcome_row(os, pt.erlangs, r.outcomes[k], tied);
          series[k].x.push_back(pt.erlangs);
          series[k].y.push_back(r.outcomes[k].blocking);
        }
        best_s.x.push_back(pt.erlangs);
        best_s.y.push_back(r.best ? r.outcomes[*r.best].blocking : std::nan(""));
      }
      if (args_.svg) {
        series.push_back(best_s);
        auto svg = open("blocking_vs_traffic.svg");
        write_svg_chart(svg, "Equilibrium blocking vs offered traffic",
                        "offered traffic (Erlangs)", "blocking probability", series, &prov);
      }
    }

    nlohmann::json summary;
    auto rows = nlohmann::json::array();
    for (const auto& pt : points) {
      nlohmann::json row{{"erlangs", pt.erlangs}};
      if (pt.nash) {
        const auto cfg = with_offered_load(base_, pt.erlangs);
        row["nash"] = nash_json(enumerate(cfg), *pt.nash);
      }
      if (pt.optimal) {
        row["optimal"] = {{"policy", pt.optimal->best.policy->to_string()},
                          {"global_utility_mbit", pt.optimal->best.global_utility},
                          {"overall_blocking", pt.optimal->best.overall_blocking},
                          {"exhaustive", pt.optimal->exhaustive}};
      }
      if (pt.peak) {
        row["peak_rate"] = {{"global_utility_mbit", pt.peak->global_utility},
                            {"overall_blocking", pt.peak->overall_blocking}};
        row["instantaneous_rate"] = {{"global_utility_mbit", pt.instantaneous->global_utility},
                                     {"overall_blocking", pt.instantaneous->overall_blocking}};
      }
      if (pt.control) row["control"] = control_json(*pt.control);
      rows.push_back(row);
    }
    summary["points"] = rows;
    write_json("sweep.json", summary, prov);

    for (const auto& pt : points) {
      out_ << format_double(pt.erlangs) << " Erl:";
      if (pt.nash)
        out_ << "  nash=" << pt.nash->equilibria.size()
             << (pt.nash->equilibria.empty()
                     ? std::string()
                     : " U=" + format_double(pt.nash->equilibria[select_equilibrium(
                                   pt.nash->equilibria, EquilibriumSelection::best_utility)]
                                                       .global_utility));
      if (pt.optimal) out_ << "  opt U=" << format_double(pt.optimal->best.global_utility);
      if (pt.peak)
        out_ << "  peak U=" << format_double(pt.peak->global_utility)
             << "  inst U=" << format_double(pt.instantaneous->global_utility);
      if (pt.control && pt.control->best)
        out_ << "  best f=" << pt.control->outcomes[*pt.control->best].scheme.to_string();
      out_ << '\n';
    }
    return 0;
  }

  int simulate_cmd() {
    load();
    const auto space = enumerate(cfg_);
    const auto sel = selected_rule(space);
    const auto options = game_options();
    const AdmissionTable admission(space, sel.rule, options.admission, sel.labels);
    SimOptions so;
    so.events = args_.events;
    so.seed = args_.seed;
    so.batches = args_.batches;
    so.confidence = args_.confidence;
    const auto report = simulate(space, admission, so);

    // Analytic counterparts.
    const auto ss = solve_steady_state(build_generator(space, admission));
    const UtilityTable table(space, admission);
    auto params = rule_params();
    params["events"] = args_.events;
    params["seed"] = args_.seed;
    params["batches"] = so.batches;
    params["confidence"] = so.confidence;
    const auto prov = provenance(params);

    auto os = open("simulation.csv");
    write_csv_provenance(os, prov);
    os << "quantity,key,analytic,simulated,half_width,inside\n";
    int outside = 0;
    const auto row = [&](const std::string& q, const std::string& key, double analytic,
                         const Estimate& e) {
      const bool inside = e.contains(analytic);
      if (!inside) ++outside;
      os << q << ",\"" << key << "\"," << format_double(analytic) << ',' << format_double(e.mean)
         << ',' << format_double(e.half_width) << ',' << (inside ? 1 : 0) << '\n';
    };
    for (int n = 0; n < space.num_classes(); ++n)
      row("blocking", cfg_.class_names[n], class_blocking(admission, ss, n),
          report.blocking[static_cast<std::size_t>(n)]);
    for (int id = 0; id < space.size(); ++id)
      row("occupancy", space.state(id).to_string(), ss.pi[static_cast<std::size_t>(id)],
          report.occupancy[static_cast<std::size_t>(id)]);
    for (const auto& [key, e] : report.entry_volume) {
      const auto [n, s, entry] = key;
      row("entry_volume",
          cfg_.class_names[n] + "@" + cfg_.system_names[s] + " " + space.state(entry).to_string(),
          table.volume(entry, n, s), e);
    }
    const auto mean_volume = mean_call_volume(space, admission, ss, table);
    for (int n = 0; n < space.num_classes(); ++n)
      for (int s = 0; s < space.num_systems(); ++s) {
        const auto k = static_cast<std::size_t>(n * space.num_systems() + s);
        if (report.volume[k].samples == 0) continue;
        row("mean_volume", cfg_.class_names[n] + "@" + cfg_.system_names[s], mean_volume[k],
            report.volume[k]);
      }

    nlohmann::json j{{"events", report.events},
                     {"seed", report.seed},
                     {"simulated_time", report.simulated_time},
                     {"arrivals", report.arrivals},
                     {"blocked", report.blocked},
                     {"departures", report.departures},
                     {"outside_ci", outside},
                     {"warnings", report.warnings}};
    nlohmann::json blocking = nlohmann::json::object();
    for (int n = 0; n < space.num_classes(); ++n) {
      const auto& e = report.blocking[static_cast<std::size_t>(n)];
      blocking[cfg_.class_names[n]] = {{"mean", e.mean}, {"half_width", json_number(e.half_width)}};
    }
    j["blocking"] = blocking;
    write_json("simulation.json", j, prov);
    for (const auto& w : report.warnings) out_ << "warning: " << w << '\n';
    const double total_blocked =
        report.arrivals ? static_cast<double>(report.blocked) / report.arrivals : 0.0;
    out_ << "events: " << report.events << "  blocking: " << format_double(total_blocked)
         << "  analytic: " << format_double(overall_blocking(space, ss, admission))
         << "  estimates outside CI: " << outside << '\n';
    return 0;
  }
};

// Builds the CLI11 parser, runs the selected subcommand and maps errors to
// exit codes: 0 success, CLI11's own code on usage errors, 2 invalid input,
// 3 solver failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Association-policy equilibria for heterogeneous wireless networks", "hetassoc"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Args args;

  const std::map<std::string, std::string> commands{
      {"validate", "Check a configuration file"},
      {"enumerate", "Write the feasible state table"},
      {"steady", "Stationary distribution and blocking of one rule"},
      {"utility", "Per-user volumes and utilities of one rule"},
      {"nash", "Pure equilibria of the policy game"},
      {"optimal", "Policy maximizing global utility"},
      {"baseline", "Peak-rate and instantaneous-rate rules"},
      {"control", "Threshold grid search for least equilibrium blocking"},
      {"sweep", "Analyses across offered traffic levels"},
      {"simulate", "Discrete-event simulation against the analytic model"}};

  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "JSON configuration")->required();
    sub->add_option("--sharing", args.sharing, "Override sharing scope (network or system)");
    sub->add_flag("--strict-eq2", args.strict, "Reject instead of redirecting to another system");
    sub->add_option("--out", args.out, "Output directory");
    if (name == "validate" || name == "enumerate") continue;
    if (name != "sweep") sub->add_option("--erlangs", args.erlangs, "Rescale to this total load");
    sub->add_option("--deviation", args.deviation, "Deviation payoff: redirect or exclude");
    sub->add_option("--jobs", args.jobs, "Worker threads (0 = hardware)");
    sub->add_option("--seed", args.seed, "Random seed");
    if (name == "steady" || name == "utility" || name == "simulate") {
      sub->add_option("--rule", args.rule, "peak_rate, instantaneous_rate or policy");
      sub->add_option("--policy", args.policy, "Policy digits, rows split by '/'");
    }
    if (name == "nash" || name == "optimal" || name == "control" || name == "sweep") {
      sub->add_option("--mode", args.mode, "auto, exhaustive or best-response");
      sub->add_option("--restarts", args.restarts, "Best-response restarts");
    }
    if (name == "nash") sub->add_flag("--trace", args.trace, "Write the best-response path");
    if (name == "control" || name == "sweep") {
      sub->add_option("--schemes", args.schemes, "Threshold vectors l,h,...;l,h,...");
      sub->add_option("--selection", args.selection, "best_utility or worst_blocking");
    }
    if (name == "control") {
      sub->add_option("--grid-step", args.grid_step, "Threshold lattice step");
      sub->add_flag("--symmetric", args.symmetric, "Same threshold pair on every system");
    }
    if (name == "sweep") {
      sub->add_option("--traffic", args.traffic, "Offered traffic A:B:STEP in Erlangs");
      sub->add_option("--analyses", args.analyses, "Comma list of nash,optimal,baselines,control");
      sub->add_flag("--svg", args.svg, "Also write SVG charts");
    }
    if (name == "simulate") {
      sub->add_option("--events", args.events, "Events to simulate");
      sub->add_option("--batches", args.batches, "Batch-means batches");
      sub->add_option("--confidence", args.confidence, "Confidence level");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const auto chosen = app.get_subcommands();
  try {
    return Runner(args, chosen.front()->get_name(), out).dispatch();
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace hetassoc::cli
