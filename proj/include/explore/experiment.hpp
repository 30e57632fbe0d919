// Copyright 2026 The Explore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXPLORE_EXPERIMENT_HPP
#define EXPLORE_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "explore/density.hpp"
#include "explore/domestication.hpp"
#include "explore/epidemic.hpp"
#include "explore/errors.hpp"
#include "explore/estimator.hpp"
#include "explore/external.hpp"
#include "explore/gridsearch.hpp"
#include "explore/io.hpp"
#include "explore/outcome.hpp"
#include "explore/params.hpp"
#include "explore/phylo/outcome.hpp"
#include "explore/rng.hpp"
#include "explore/sampler.hpp"
#include "json.hpp"

namespace explore {

using nlohmann::json;

/// Proposal half-width as a fraction of the dimension width when a config gives none. With reflection,
/// a half-width equal to the full width proposes uniformly over the whole range.
inline constexpr double kDefaultProposalFraction = 1.0;

struct ExperimentConfig {
  json raw;  ///< the validated document, kept for hashing and metadata
  std::string name;
  json simulator;
  ParameterSpace space;
  std::vector<double> half_widths;
  ChainConfig chain;
  KdeOptions kde;
  std::size_t importance_draws = 1000;
  std::optional<SurfaceGridSpec> surface;
  std::map<std::size_t, std::vector<double>> surface_axes;
  std::vector<std::vector<std::size_t>> marginals;
  std::optional<GridSpec> grid;
  bool complement = false;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string output = "out";
};

/// Builtin simulator names and the number of dimensions each expects.
inline const std::map<std::string, std::size_t>& builtin_simulators() {
  static const std::map<std::string, std::size_t> names{
      {"bernoulli-oracle", 1}, {"phylo-a1", 2}, {"domestication-a2", 7}, {"toy-epidemic-a3", 2}};
  return names;
}

namespace detail {

class Errors {
 public:
  void add(const std::string& field, const std::string& what) { list_.push_back(field + ": " + what); }
  [[nodiscard]] const std::vector<std::string>& list() const noexcept { return list_; }

 private:
  std::vector<std::string> list_;
};

inline bool is_count(const json& j) { return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0); }

inline std::string known_builtins() {
  std::string s;
  for (const auto& [k, v] : builtin_simulators()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

inline void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed, Errors& err) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) err.add(where + "." + k, "unknown field");
}

inline void check_external(const json& j, const std::string& where, const ParameterSpace* space, Errors& err) {
  if (!j.is_object()) return err.add(where, "must be an object");
  check_keys(j, where, {"executable", "args", "flags", "outcome", "timeout_seconds"}, err);
  if (!j.contains("executable") || !j["executable"].is_string() || j["executable"].get<std::string>().empty())
    err.add(where + ".executable", "required non-empty string");
  if (j.contains("args")) {
    if (!j["args"].is_array()) err.add(where + ".args", "must be an array of strings");
    else
      for (const auto& a : j["args"])
        if (!a.is_string()) err.add(where + ".args", "must be an array of strings");
  }
  if (j.contains("flags")) {
    if (!j["flags"].is_object()) {
      err.add(where + ".flags", "must map dimension names to flag names");
    } else {
      std::set<std::string> used;
      for (const auto& [dim, flag] : j["flags"].items()) {
        if (!flag.is_string() || flag.get<std::string>().empty())
          err.add(where + ".flags." + dim, "must be a non-empty string");
        if (space && !space->index_of(dim)) err.add(where + ".flags." + dim, "no such dimension");
      }
      if (space) {
        for (const auto& d : space->dims()) {
          const auto& f = j["flags"];
          const std::string flag = f.contains(d.name) && f[d.name].is_string() ? f[d.name].get<std::string>() : d.name;
          if (!used.insert(flag).second) err.add(where + ".flags", "flag '" + flag + "' used by two dimensions");
        }
      }
    }
  }
  if (j.contains("outcome")) {
    const auto& o = j["outcome"];
    if (!o.is_object()) {
      err.add(where + ".outcome", "must be an object");
    } else {
      check_keys(o, where + ".outcome", {"metric", "comparison", "threshold"}, err);
      if (!o.contains("metric") || !o["metric"].is_string()) err.add(where + ".outcome.metric", "required string");
      if (o.contains("comparison")) {
        const std::string c = o["comparison"].is_string() ? o["comparison"].get<std::string>() : "";
        if (c != "<" && c != "<=" && c != ">" && c != ">=")
          err.add(where + ".outcome.comparison", "must be one of <, <=, >, >=");
      }
      if (!o.contains("threshold") || !o["threshold"].is_number())
        err.add(where + ".outcome.threshold", "required number");
    }
  }
  if (j.contains("timeout_seconds") && (!j["timeout_seconds"].is_number() || !(j["timeout_seconds"].get<double>() > 0.0)))
    err.add(where + ".timeout_seconds", "must be a positive number");
}

inline ExternalSimSpec parse_external(const json& j) {
  ExternalSimSpec s;
  s.executable = j.at("executable").get<std::string>();
  if (j.contains("args")) s.fixed_args = j["args"].get<std::vector<std::string>>();
  if (j.contains("flags")) s.flags = j["flags"].get<std::map<std::string, std::string>>();
  if (j.contains("outcome")) {
    const auto& o = j["outcome"];
    s.outcome.metric = o.at("metric").get<std::string>();
    s.outcome.comparison = parse_comparison(o.value("comparison", std::string("<=")));
    s.outcome.threshold = o.at("threshold").get<double>();
  }
  s.timeout_seconds = j.value("timeout_seconds", 60.0);
  return s;
}

inline void check_tie(const json& j, const std::string& where, Errors& err) {
  if (!j.contains("tie")) return;
  const std::string t = j["tie"].is_string() ? j["tie"].get<std::string>() : "";
  if (t != "at_most_equal" && t != "strict") err.add(where + ".tie", "must be at_most_equal or strict");
}

inline void check_simulator(const json& sim, const ParameterSpace* space, Errors& err) {
  if (!sim.is_object()) return err.add("simulator", "must be an object");
  const int kinds = sim.contains("builtin") + sim.contains("external") + sim.contains("paired");
  if (kinds != 1) return err.add("simulator", "needs exactly one of builtin, external, paired");

  if (sim.contains("external")) {
    check_keys(sim, "simulator", {"external"}, err);
    return check_external(sim["external"], "simulator.external", space, err);
  }
  if (sim.contains("paired")) {
    check_keys(sim, "simulator", {"paired"}, err);
    const auto& p = sim["paired"];
    if (!p.is_object()) return err.add("simulator.paired", "must be an object");
    check_keys(p, "simulator.paired", {"a", "b", "criterion", "larger_is_better", "tie"}, err);
    for (const char* side : {"a", "b"}) {
      if (!p.contains(side)) err.add(std::string("simulator.paired.") + side, "required");
      else check_external(p[side], std::string("simulator.paired.") + side, space, err);
    }
    if (!p.contains("criterion") || !p["criterion"].is_string()) err.add("simulator.paired.criterion", "required string");
    if (p.contains("larger_is_better") && !p["larger_is_better"].is_boolean())
      err.add("simulator.paired.larger_is_better", "must be a boolean");
    return check_tie(p, "simulator.paired", err);
  }

  if (!sim["builtin"].is_string()) return err.add("simulator.builtin", "must be a string");
  const std::string name = sim["builtin"].get<std::string>();
  const auto it = builtin_simulators().find(name);
  if (it == builtin_simulators().end())
    return err.add("simulator.builtin", "unknown simulator '" + name + "' (known: " + known_builtins() + ")");
  if (space && space->size() != it->second)
    err.add("space", "simulator '" + name + "' needs " + std::to_string(it->second) + " dimensions, got " +
                         std::to_string(space->size()));
  auto count_field = [&](const char* key, bool positive) {
    if (!sim.contains(key)) return;
    if (!is_count(sim[key]) || (positive && sim[key].get<std::size_t>() == 0))
      err.add(std::string("simulator.") + key, positive ? "must be a positive integer" : "must be a non-negative integer");
  };
  if (name == "bernoulli-oracle") {
    check_keys(sim, "simulator", {"builtin"}, err);
  } else if (name == "phylo-a1") {
    check_keys(sim, "simulator", {"builtin", "taxa", "sites"}, err);
    count_field("taxa", true);
    count_field("sites", true);
    if (sim.contains("taxa") && is_count(sim["taxa"]) && sim["taxa"].get<std::size_t>() < 4)
      err.add("simulator.taxa", "must be at least 4");
  } else if (name == "domestication-a2") {
    check_keys(sim, "simulator",
               {"builtin", "loci", "founders", "shared_founders", "samples_per_population", "diversity_sample"}, err);
    for (const char* k : {"loci", "founders", "samples_per_population"}) count_field(k, true);
    count_field("diversity_sample", false);
    if (sim.contains("shared_founders") && !sim["shared_founders"].is_boolean())
      err.add("simulator.shared_founders", "must be a boolean");
  } else if (name == "toy-epidemic-a3") {
    check_keys(sim, "simulator", {"builtin", "criterion", "strategies", "tie", "population", "days"}, err);
    if (sim.contains("criterion")) {
      const std::string c = sim["criterion"].is_string() ? sim["criterion"].get<std::string>() : "";
      if (c != "peak" && c != "total") err.add("simulator.criterion", "must be peak or total");
    }
    if (sim.contains("strategies")) {
      const auto& s = sim["strategies"];
      bool ok = s.is_array() && s.size() == 2;
      if (ok)
        for (const auto& x : s) {
          const std::string v = x.is_string() ? x.get<std::string>() : "";
          ok = ok && (v == "none" || v == "closure" || v == "antiviral");
        }
      if (!ok) err.add("simulator.strategies", "must be two of none, closure, antiviral");
    }
    check_tie(sim, "simulator", err);
    count_field("population", true);
    count_field("days", true);
  }
}

inline std::optional<ParameterSpace> check_space(const json& j, Errors& err, std::vector<double>* half_widths) {
  if (!j.is_array() || j.empty()) {
    err.add("space", "must be a non-empty array of dimensions");
    return std::nullopt;
  }
  std::vector<Dimension> dims;
  std::set<std::string> names;
  bool ok = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& d = j[i];
    const std::string where = "space[" + std::to_string(i) + "]";
    if (!d.is_object()) {
      err.add(where, "must be an object");
      ok = false;
      continue;
    }
    check_keys(d, where, {"name", "lower", "upper", "integer", "proposal_half_width"}, err);
    Dimension dim;
    if (!d.contains("name") || !d["name"].is_string() || d["name"].get<std::string>().empty()) {
      err.add(where + ".name", "required non-empty string");
      ok = false;
    } else {
      dim.name = d["name"].get<std::string>();
      if (!names.insert(dim.name).second) {
        err.add(where + ".name", "duplicate dimension '" + dim.name + "'");
        ok = false;
      }
    }
    const bool has_bounds = d.contains("lower") && d["lower"].is_number() && d.contains("upper") && d["upper"].is_number();
    if (!d.contains("lower") || !d["lower"].is_number()) err.add(where + ".lower", "required number");
    if (!d.contains("upper") || !d["upper"].is_number()) err.add(where + ".upper", "required number");
    if (!has_bounds) {
      ok = false;
      continue;
    }
    dim.lower = d["lower"].get<double>();
    dim.upper = d["upper"].get<double>();
    if (!(dim.lower < dim.upper)) {
      err.add(where, "lower bound must be < upper bound for '" + dim.name + "'");
      ok = false;
    }
    if (d.contains("integer")) {
      if (!d["integer"].is_boolean()) err.add(where + ".integer", "must be a boolean");
      else dim.integer_valued = d["integer"].get<bool>();
    }
    if (dim.integer_valued && (dim.lower != std::round(dim.lower) || dim.upper != std::round(dim.upper))) {
      err.add(where, "integer dimension '" + dim.name + "' needs integer bounds");
      ok = false;
    }
    double hw = kDefaultProposalFraction * (dim.upper - dim.lower);
    if (d.contains("proposal_half_width")) {
      if (!d["proposal_half_width"].is_number() || !(d["proposal_half_width"].get<double>() >= 0.0))
        err.add(where + ".proposal_half_width", "must be a non-negative number");
      else hw = d["proposal_half_width"].get<double>();
    }
    if (half_widths) half_widths->push_back(hw);
    dims.push_back(dim);
  }
  if (!ok) return std::nullopt;
  return ParameterSpace(std::move(dims));
}

/// Grid-like section: counts (one per dim or a single broadcast value), midpoints, explicit axes, fixed slices.
inline void check_grid_section(const json& g, const std::string& where, const ParameterSpace* space, bool replicates,
                               Errors& err) {
  if (!g.is_object()) return err.add(where, "must be an object");
  std::set<std::string> allowed{"counts", "midpoints", "axes"};
  if (replicates) allowed.insert("replicates");
  else {
    allowed.insert("fixed");
    allowed.insert("marginals");
  }
  check_keys(g, where, allowed, err);
  if (!g.contains("counts")) {
    err.add(where + ".counts", "required");
  } else if (is_count(g["counts"])) {
    if (g["counts"].get<std::size_t>() == 0) err.add(where + ".counts", "must be >= 1");
  } else if (g["counts"].is_array()) {
    if (space && g["counts"].size() != space->size())
      err.add(where + ".counts", "needs one entry per dimension (" + std::to_string(space->size()) + ")");
    for (const auto& c : g["counts"])
      if (!is_count(c) || c.get<std::size_t>() == 0) err.add(where + ".counts", "entries must be positive integers");
  } else {
    err.add(where + ".counts", "must be a positive integer or an array of them");
  }
  if (g.contains("midpoints") && !g["midpoints"].is_boolean()) err.add(where + ".midpoints", "must be a boolean");
  if (replicates && g.contains("replicates") && (!is_count(g["replicates"]) || g["replicates"].get<std::size_t>() == 0))
    err.add(where + ".replicates", "must be a positive integer");
  auto by_name = [&](const char* key, bool arrays) {
    if (!g.contains(key)) return;
    if (!g[key].is_object()) return err.add(where + "." + key, "must map dimension names to values");
    for (const auto& [dim, v] : g[key].items()) {
      if (space && !space->index_of(dim)) err.add(where + "." + key + "." + dim, "no such dimension");
      bool ok = arrays ? v.is_array() && !v.empty() : v.is_number();
      if (ok && arrays)
        for (const auto& x : v) ok = ok && x.is_number();
      if (!ok) err.add(where + "." + key + "." + dim, arrays ? "must be a non-empty array of numbers" : "must be a number");
      if (ok && space && space->index_of(dim)) {
        const auto& d = (*space)[*space->index_of(dim)];
        const auto within = [&](const json& x) { return d.contains(x.get<double>()); };
        if (arrays ? !std::all_of(v.begin(), v.end(), within) : !within(v))
          err.add(where + "." + key + "." + dim, "values must lie inside the dimension bounds");
      }
    }
  };
  by_name("axes", true);
  if (!replicates) by_name("fixed", false);
  if (!replicates && g.contains("marginals")) {
    const auto& m = g["marginals"];
    bool ok = m.is_array();
    if (ok)
      for (const auto& group : m) {
        ok = ok && group.is_array() && !group.empty();
        if (ok)
          for (const auto& name : group)
            ok = ok && name.is_string() && (!space || space->index_of(name.get<std::string>()));
      }
    if (!ok) err.add(where + ".marginals", "must be an array of non-empty arrays of dimension names");
  }
}

inline std::vector<std::size_t> grid_counts(const json& g, std::size_t d) {
  if (g["counts"].is_array()) return g["counts"].get<std::vector<std::size_t>>();
  return std::vector<std::size_t>(d, g["counts"].get<std::size_t>());
}

inline std::map<std::size_t, std::vector<double>> grid_axes(const json& g, const ParameterSpace& space) {
  std::map<std::size_t, std::vector<double>> out;
  if (g.contains("axes"))
    for (const auto& [dim, v] : g["axes"].items()) out[*space.index_of(dim)] = v.get<std::vector<double>>();
  return out;
}

}  // namespace detail

/// Static validation; returns every problem found (empty when the config is valid).
inline std::vector<std::string> validate_config(const json& j) {
  detail::Errors err;
  if (!j.is_object()) {
    err.add("(root)", "config must be a JSON object");
    return err.list();
  }
  detail::check_keys(j, "(root)",
                     {"name", "seed", "workers", "output", "simulator", "space", "chain", "kde", "importance",
                      "surface", "grid", "complement"},
                     err);
  if (j.contains("name") && !j["name"].is_string()) err.add("name", "must be a string");
  if (!j.contains("seed")) err.add("seed", "required");
  else if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0))
    err.add("seed", "must be a non-negative integer");
  if (j.contains("workers") && (!detail::is_count(j["workers"]) || j["workers"].get<std::size_t>() == 0))
    err.add("workers", "must be a positive integer");
  if (j.contains("output") && (!j["output"].is_string() || j["output"].get<std::string>().empty()))
    err.add("output", "must be a non-empty path");

  std::optional<ParameterSpace> space;
  if (!j.contains("space")) err.add("space", "required");
  else space = detail::check_space(j["space"], err, nullptr);
  const ParameterSpace* sp = space ? &*space : nullptr;

  if (!j.contains("simulator")) err.add("simulator", "required");
  else detail::check_simulator(j["simulator"], sp, err);

  if (!j.contains("chain")) {
    err.add("chain", "required");
  } else if (!j["chain"].is_object()) {
    err.add("chain", "must be an object");
  } else {
    const auto& c = j["chain"];
    detail::check_keys(c, "chain", {"steps", "thin", "burn_in", "init_attempts"}, err);
    if (!c.contains("steps") || !detail::is_count(c["steps"])) err.add("chain.steps", "required non-negative integer");
    for (const char* k : {"thin", "init_attempts"})
      if (c.contains(k) && (!detail::is_count(c[k]) || c[k].get<std::size_t>() == 0))
        err.add(std::string("chain.") + k, "must be a positive integer");
    if (c.contains("burn_in") && !detail::is_count(c["burn_in"])) err.add("chain.burn_in", "must be a non-negative integer");
    if (c.contains("steps") && detail::is_count(c["steps"])) {
      ChainConfig cc;
      cc.n_steps = c["steps"].get<std::size_t>();
      if (c.contains("thin") && detail::is_count(c["thin"])) cc.thin = c["thin"].get<std::size_t>();
      if (c.contains("burn_in") && detail::is_count(c["burn_in"])) cc.burn_in = c["burn_in"].get<std::size_t>();
      try {
        if (cc.thin > 0) cc.validate();
      } catch (const ContractViolation& e) {
        err.add("chain", std::string(e.what()).substr(std::string("chain config: ").size()));
      }
    }
  }

  if (j.contains("kde")) {
    if (!j["kde"].is_object()) {
      err.add("kde", "must be an object");
    } else {
      detail::check_keys(j["kde"], "kde", {"truncated", "allow_degenerate"}, err);
      for (const char* k : {"truncated", "allow_degenerate"})
        if (j["kde"].contains(k) && !j["kde"][k].is_boolean()) err.add(std::string("kde.") + k, "must be a boolean");
    }
  }
  if (!j.contains("importance")) {
    err.add("importance", "required");
  } else if (!j["importance"].is_object()) {
    err.add("importance", "must be an object");
  } else {
    detail::check_keys(j["importance"], "importance", {"draws"}, err);
    if (!j["importance"].contains("draws") || !detail::is_count(j["importance"]["draws"]) ||
        j["importance"]["draws"].get<std::size_t>() == 0)
      err.add("importance.draws", "required positive integer");
  }
  if (!j.contains("surface")) err.add("surface", "required");
  else detail::check_grid_section(j["surface"], "surface", sp, false, err);
  if (j.contains("grid")) detail::check_grid_section(j["grid"], "grid", sp, true, err);
  if (j.contains("complement") && !j["complement"].is_boolean()) err.add("complement", "must be a boolean");
  return err.list();
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig parse_config(const json& j) {
  const auto errors = validate_config(j);
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  ExperimentConfig c;
  c.raw = j;
  c.name = j.value("name", std::string("experiment"));
  c.seed = j["seed"].get<std::uint64_t>();
  c.workers = j.value("workers", std::size_t{1});
  c.output = j.value("output", std::string("out"));
  c.simulator = j["simulator"];
  detail::Errors ignored;
  c.space = *detail::check_space(j["space"], ignored, &c.half_widths);

  const auto& ch = j["chain"];
  c.chain.n_steps = ch["steps"].get<std::size_t>();
  c.chain.thin = ch.value("thin", std::size_t{1});
  if (ch.contains("burn_in")) c.chain.burn_in = ch["burn_in"].get<std::size_t>();
  c.chain.init_attempts = ch.value("init_attempts", std::size_t{10000});

  if (j.contains("kde")) {
    c.kde.truncated = j["kde"].value("truncated", true);
    c.kde.allow_degenerate = j["kde"].value("allow_degenerate", false);
  }
  c.importance_draws = j["importance"]["draws"].get<std::size_t>();

  if (j.contains("surface")) {
    const auto& s = j["surface"];
    SurfaceGridSpec spec;
    spec.counts = detail::grid_counts(s, c.space.size());
    spec.midpoints = s.value("midpoints", true);
    if (s.contains("fixed"))
      for (const auto& [dim, v] : s["fixed"].items()) spec.fixed[*c.space.index_of(dim)] = v.get<double>();
    c.surface = spec;
    c.surface_axes = detail::grid_axes(s, c.space);
    if (s.contains("marginals"))
      for (const auto& group : s["marginals"]) {
        std::vector<std::size_t> keep;
        for (const auto& name : group) keep.push_back(*c.space.index_of(name.get<std::string>()));
        c.marginals.push_back(keep);
      }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    GridSpec spec;
    spec.counts = detail::grid_counts(g, c.space.size());
    spec.midpoints = g.value("midpoints", true);
    spec.replicates = g.value("replicates", std::size_t{100});
    spec.explicit_axes = detail::grid_axes(g, c.space);
    c.grid = spec;
  }
  c.complement = j.value("complement", false);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(load_json_file(path)); }

/// Canonical document used for hashing and metadata: the effective seed, without output location or worker count.
inline json canonical_config(const ExperimentConfig& c) {
  json j = c.raw;
  j.erase("output");
  j.erase("workers");
  j["seed"] = c.seed;
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(canonical_config(c).dump())));
  return buf;
}

/// Builds the configured simulator. Paired and toy-epidemic simulators turn one stream draw into a shared seed.
inline AnySimulator make_simulator(const json& sim, const ParameterSpace& space) {
  if (sim.contains("external")) return AnySimulator(SeededAdapter(external_side(detail::parse_external(sim["external"]), space)));
  if (sim.contains("paired")) {
    const auto& p = sim["paired"];
    PairedComparisonSpec spec;
    spec.a = external_side(detail::parse_external(p["a"]), space);
    spec.b = external_side(detail::parse_external(p["b"]), space);
    spec.criterion = p["criterion"].get<std::string>();
    spec.larger_is_better = p.value("larger_is_better", false);
    spec.tie = p.value("tie", std::string("at_most_equal")) == "strict" ? TieRule::strict : TieRule::at_most_equal;
    return AnySimulator(PairedSimulator(std::move(spec)));
  }
  const std::string name = sim.at("builtin").get<std::string>();
  if (name == "bernoulli-oracle") return AnySimulator(BernoulliOracle{});
  if (name == "phylo-a1") {
    phylo::PhyloSimulator s;
    s.n_taxa = sim.value("taxa", s.n_taxa);
    s.sites = sim.value("sites", s.sites);
    return AnySimulator(s);
  }
  if (name == "domestication-a2") {
    domestication::MonophylySimulator s;
    auto& o = s.options;
    o.loci = sim.value("loci", o.loci);
    o.founders = sim.value("founders", o.founders);
    o.shared_founders = sim.value("shared_founders", o.shared_founders);
    o.samples_per_population = sim.value("samples_per_population", o.samples_per_population);
    o.diversity_sample = sim.value("diversity_sample", o.diversity_sample);
    return AnySimulator(s);
  }
  if (name == "toy-epidemic-a3") {
    epidemic::EpidemicConfig ec;
    ec.population = sim.value("population", ec.population);
    ec.days = sim.value("days", ec.days);
    const auto model = std::make_shared<const epidemic::ToyEpidemic>(ec);
    const auto strategies = sim.value("strategies", std::vector<std::string>{"closure", "antiviral"});
    PairedComparisonSpec spec;
    spec.a = epidemic::strategy_side(model, epidemic::parse_strategy(strategies[0]));
    spec.b = epidemic::strategy_side(model, epidemic::parse_strategy(strategies[1]));
    spec.criterion = sim.value("criterion", std::string("peak"));
    spec.tie = sim.value("tie", std::string("at_most_equal")) == "strict" ? TieRule::strict : TieRule::at_most_equal;
    return AnySimulator(PairedSimulator(std::move(spec)));
  }
  throw ConfigError("simulator.builtin: unknown simulator '" + name + "' (known: " + detail::known_builtins() + ")");
}

/**
 * Files are written as `<name>.partial` and renamed only after every stage
 * succeeded, so a failed run leaves nothing that looks complete.
 */
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, io::Provenance provenance)
      : dir_(std::move(dir)), provenance_(std::move(provenance)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw ConfigError("output: cannot create directory '" + dir_.string() + "'");
  }

  [[nodiscard]] const io::Provenance& provenance() const noexcept { return provenance_; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = dir_ / (name + ".partial");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("output: cannot write '" + path.string() + "'");
    body(out);
    if (!out) throw ConfigError("output: write failed for '" + path.string() + "'");
    pending_.push_back(name);
  }

  void write_csv(const std::string& name, const std::function<void(std::ostream&, const io::Provenance&)>& body) {
    write(name, [&](std::ostream& os) { body(os, provenance_); });
  }

  void write_json(const std::string& name, json j) {
    j["seed"] = provenance_.seed;
    j["config_hash"] = provenance_.config_hash;
    write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  void commit() {
    for (const auto& name : pending_) std::filesystem::rename(dir_ / (name + ".partial"), dir_ / name);
    written_.insert(written_.end(), pending_.begin(), pending_.end());
    pending_.clear();
  }

  [[nodiscard]] const std::vector<std::string>& written() const noexcept { return written_; }

 private:
  std::filesystem::path dir_;
  io::Provenance provenance_;
  std::vector<std::string> pending_;
  std::vector<std::string> written_;
};

namespace detail {

/// Re-throws an error with a stage prefix, keeping its type so the caller can map it to an exit code.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  const std::string p = "stage " + name + ": ";
  try {
    return fn();
  } catch (const SimulatorError& e) {
    throw SimulatorError(p + e.what(), e.captured_stdout(), e.captured_stderr());
  } catch (const InitializationError& e) {
    throw InitializationError(p + e.what(), e.budget());
  } catch (const KdeFitError& e) {
    throw KdeFitError(p + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(p + e.what());
  } catch (const DomainError& e) {
    throw DomainError(p + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(p + e.what());
  } catch (const ContractViolation& e) {
    throw ContractViolation(p + e.what());
  }
}

inline json trace_metadata(const ExperimentConfig& c, const ChainTrace& trace, const ChainConfig& cc,
                           std::size_t retained) {
  const auto rates = acceptance_report(trace);
  const auto& counts = trace.counts();
  json j;
  j["config"] = canonical_config(c);
  j["steps"] = cc.n_steps;
  j["burn_in"] = cc.effective_burn_in();
  j["thin"] = cc.thin;
  j["chain_seed"] = cc.master_seed;
  j["init_attempts"] = trace.init_attempts();
  j["simulator_calls"] = trace.simulator_calls();
  j["retained_samples"] = retained;
  j["counts"] = {{"accepted", counts.accepted},
                 {"rejected_by_prior_kernel", counts.rejected_by_prior_kernel},
                 {"rejected_by_outcome", counts.rejected_by_outcome}};
  j["acceptance"] = {{"accepted", rates.accepted},
                     {"rejected_by_prior_kernel", rates.rejected_by_prior_kernel},
                     {"rejected_by_outcome", rates.rejected_by_outcome}};
  return j;
}

inline void write_kde_points(std::ostream& os, const KdeModel& kde, const io::Provenance& p) {
  std::vector<ParameterVector> pts;
  for (std::size_t i = 0; i < kde.size(); ++i) pts.push_back(kde.point(i));
  write_samples_csv(os, kde.support(), pts, p);
}

struct PipelineResult {
  ChainTrace trace;
  std::vector<ParameterVector> samples;
  KdeModel kde;
};

template <OutcomeSimulator S>
PipelineResult chain_and_kde(const ExperimentConfig& c, const S& sim, const UniformBoxPrior& prior,
                             const UniformWindowKernel& kernel, const ChainConfig& cc, const std::string& label) {
  ChainTrace trace = stage(label + "chain", [&] { return run_chain(sim, prior, kernel, cc); });
  auto samples = trace.retained();
  KdeModel kde = stage(label + "kde", [&] { return fit_kde(samples, c.space, c.kde); });
  return {std::move(trace), std::move(samples), std::move(kde)};
}

}  // namespace detail

/// Everything the pipeline computed, returned alongside the files for callers that want the numbers.
struct ExperimentResult {
  std::string config_hash;
  MarginalEstimate outcome;
  std::optional<ComplementCheck> complement;
  std::optional<LikelihoodSurface> surface;
  std::optional<LikelihoodSurface> grid;
  std::vector<ParameterVector> samples;
  std::vector<std::string> artifacts;
};

inline GridAxes surface_axes(const ExperimentConfig& c) {
  GridAxes base = make_axes(c.space, c.surface->counts, c.surface->midpoints, c.surface->fixed);
  auto axes = base.axes();
  for (const auto& [k, pts] : c.surface_axes)
    if (!c.surface->fixed.count(k)) axes[k] = pts;
  return GridAxes(std::move(axes));
}

inline std::string marginal_name(const ExperimentConfig& c, const std::vector<std::size_t>& keep) {
  std::string s = "surface_marginal";
  std::vector<std::size_t> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (auto k : sorted) s += "_" + c.space[k].name;
  return s + ".csv";
}

/// Replicate grid baseline only (`explore grid`).
inline ExperimentResult run_grid_only(const ExperimentConfig& c) {
  if (!c.grid) throw ConfigError("grid: config has no grid section");
  ExperimentResult res;
  res.config_hash = config_hash(c);
  ArtifactWriter out(c.output, io::Provenance{c.seed, res.config_hash});
  const AnySimulator sim = detail::stage("setup", [&] { return make_simulator(c.simulator, c.space); });
  res.grid = detail::stage("grid", [&] {
    return grid_estimate(sim, c.space, *c.grid, RngStream::derive(c.seed, "grid"), c.workers);
  });
  out.write_csv("grid.csv", [&](std::ostream& os, const io::Provenance& p) { write_surface_csv(os, *res.grid, p); });
  out.write_json("grid.json", {{"replicates", c.grid->replicates}, {"grid_points", res.grid->size()}});
  out.commit();
  res.artifacts = out.written();
  return res;
}

/**
 * \brief Chain -> KDE -> importance sampling -> surface, plus optional complement run and grid baseline.
 *
 * Stream layout under the master seed: chain on the seed itself, complement
 * chain on derive_key(seed, "complement-chain"), importance sampling on
 * derive(seed, "importance") (substreams "outcome"/"complement"), grid on
 * derive(seed, "grid").
 */
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult res;
  res.config_hash = config_hash(c);
  ArtifactWriter out(c.output, io::Provenance{c.seed, res.config_hash});

  const AnySimulator sim = detail::stage("setup", [&] { return make_simulator(c.simulator, c.space); });
  const UniformBoxPrior prior(c.space);
  const UniformWindowKernel kernel(c.half_widths);

  ChainConfig cc = c.chain;
  cc.master_seed = c.seed;
  auto main = detail::chain_and_kde(c, sim, prior, kernel, cc, "");
  res.samples = main.samples;
  out.write_csv("trace.csv", [&](std::ostream& os, const io::Provenance& p) { write_trace_csv(os, main.trace, p); });
  out.write_json("trace.json", detail::trace_metadata(c, main.trace, cc, main.samples.size()));
  out.write_csv("samples.csv",
                [&](std::ostream& os, const io::Provenance& p) { write_samples_csv(os, c.space, main.samples, p); });
  out.write_csv("kde_points.csv", [&](std::ostream& os, const io::Provenance& p) { detail::write_kde_points(os, main.kde, p); });
  out.write_json("kde.json", kde_to_json(main.kde));

  const RngStream is_rng = RngStream::derive(c.seed, "importance");
  res.outcome = detail::stage("importance", [&] {
    return estimate_marginal(main.kde, prior, sim, c.importance_draws, is_rng.substream("outcome"), c.workers);
  });
  out.write_json("marginal.json", to_json(res.outcome));

  if (c.complement) {
    const Negated<AnySimulator> negated(sim);
    ChainConfig ccc = c.chain;
    ccc.master_seed = RngStream::derive_key(c.seed, "complement-chain", 0);
    json consistency;
    std::optional<detail::PipelineResult> comp;
    try {
      comp = detail::chain_and_kde(c, negated, prior, kernel, ccc, "complement-");
    } catch (const InitializationError& e) {
      consistency["complement_chain"] = std::string("no starting point: ") + e.what();
    }
    ComplementCheck check;
    check.outcome = res.outcome;
    if (comp) {
      out.write_csv("complement_trace.csv",
                    [&](std::ostream& os, const io::Provenance& p) { write_trace_csv(os, comp->trace, p); });
      out.write_json("complement_trace.json", detail::trace_metadata(c, comp->trace, ccc, comp->samples.size()));
      out.write_csv("complement_samples.csv", [&](std::ostream& os, const io::Provenance& p) {
        write_samples_csv(os, c.space, comp->samples, p);
      });
      out.write_csv("complement_kde_points.csv",
                    [&](std::ostream& os, const io::Provenance& p) { detail::write_kde_points(os, comp->kde, p); });
      out.write_json("complement_kde.json", kde_to_json(comp->kde));
      check.complement = detail::stage("complement-importance", [&] {
        return estimate_marginal(comp->kde, prior, negated, c.importance_draws, is_rng.substream("complement"),
                                 c.workers);
      });
      out.write_json("complement_marginal.json", to_json(check.complement));
    }
    check.gap = complement_gap(check.outcome, check.complement);
    consistency["p_hat"] = check.outcome.p_hat;
    consistency["complement_p_hat"] = check.complement.p_hat;
    consistency["gap"] = check.gap;
    out.write_json("consistency.json", consistency);
    res.complement = check;
  }

  if (c.surface) {
    res.surface = detail::stage("surface", [&] {
      return likelihood_grid(main.kde, prior, res.outcome, surface_axes(c), c.workers);
    });
    out.write_csv("surface.csv", [&](std::ostream& os, const io::Provenance& p) { write_surface_csv(os, *res.surface, p); });
    out.write_json("surface.json", surface_sidecar(*res.surface));
    for (const auto& keep : c.marginals) {
      const auto m = marginal_average(*res.surface, keep);
      out.write_csv(marginal_name(c, keep), [&](std::ostream& os, const io::Provenance& p) { write_surface_csv(os, m, p); });
    }
  }

  if (c.grid) {
    res.grid = detail::stage("grid", [&] {
      return grid_estimate(sim, c.space, *c.grid, RngStream::derive(c.seed, "grid"), c.workers);
    });
    out.write_csv("grid.csv", [&](std::ostream& os, const io::Provenance& p) { write_surface_csv(os, *res.grid, p); });
    out.write_json("grid.json", {{"replicates", c.grid->replicates}, {"grid_points", res.grid->size()}});
  }

  out.commit();
  res.artifacts = out.written();
  return res;
}

}  // namespace explore

#endif
