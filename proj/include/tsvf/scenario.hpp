// Copyright 2026 The tsvf Authors
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

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "tsvf/measurement.hpp"
#include "tsvf/prng.hpp"
#include "tsvf/robustness.hpp"
#include "tsvf/rules.hpp"
#include "tsvf/stats.hpp"
#include "tsvf/twostate.hpp"

namespace tsvf {

// ---------------------------------------------------------------------------
// Config model
// ---------------------------------------------------------------------------

/// Any problem with a scenario configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The file is not well-formed structured text; the message carries the
/// offending line and column.
class ConfigParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// The file parsed but a field is missing, unknown, ill-typed, or violates a
/// scenario precondition; the message names the field path.
class ConfigValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

enum class ScenarioKind {
  single_measurement,
  sequential_measurement,
  signaling,
  born_ensemble,
  robustness_sweep,
  abl_query,
  weak_value_query,
};

/// Kind names in catalog order, each with a one-line description.
inline const std::vector<std::pair<std::string, std::string>>& scenario_catalog() {
  static const std::vector<std::pair<std::string, std::string>> catalog = {
      {"single_measurement",
       "one recorded qubit measurement between fixed boundary states, with a "
       "mid-run analysis window"},
      {"sequential_measurement",
       "two recorded spin measurements along different axes, with analysis "
       "windows after, between, and before them"},
      {"signaling",
       "entangled pair with both boundaries known: a local action on one side "
       "steers the other side's conditional outcome"},
      {"born_ensemble",
       "seeded ensemble of final states drawn with pre-selected-only weights, "
       "checked against the expected distribution"},
      {"robustness_sweep",
       "grid of record-robustness ratios over environment overlap, register "
       "size, and collapsed-particle count"},
      {"abl_query",
       "intermediate-outcome probabilities conditioned on both an initial and "
       "a final boundary state"},
      {"weak_value_query",
       "weak values of one or more observables between fixed boundary states"},
  };
  return catalog;
}

inline std::string to_string(ScenarioKind k) {
  return scenario_catalog()[static_cast<std::size_t>(k)].first;
}

inline ScenarioKind parse_kind(const std::string& text) {
  const auto& catalog = scenario_catalog();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (catalog[i].first == text) return static_cast<ScenarioKind>(i);
  }
  throw ConfigValidationError("config field 'kind': unknown scenario kind '" +
                              text + "'");
}

/// A fully validated scenario description. `canonical` is the echo form:
/// defaults materialized, states normalized, keys in sorted order. Replaying
/// the echo reproduces the run bit-for-bit.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::abl_query;
  std::string name;
  std::optional<std::uint64_t> seed;
  std::string output_path;
  nlohmann::json canonical;
  std::vector<std::string> notes;
};

/// Replace the seed (e.g. from a command-line flag), keeping the echo in sync.
inline void override_seed(ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.canonical["seed"] = seed;
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void fail_field(const std::string& path,
                                    const std::string& why) {
  throw ConfigValidationError("config field '" + path + "': " + why);
}

/// Shortest round-trip decimal text for a double (stable across runs).
inline std::string number_text(double x) { return nlohmann::json(x).dump(); }

inline void check_known_fields(const nlohmann::json& obj,
                               const std::vector<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      fail_field(item.key(), "unknown field");
    }
  }
}

inline const nlohmann::json& require_member(const nlohmann::json& obj,
                                            const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_field(key, "required field is missing");
  return *it;
}

inline double as_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) fail_field(path, "expected a number");
  return j.get<double>();
}

inline std::uint64_t as_count(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer()) fail_field(path, "expected a non-negative integer");
  if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0) {
    fail_field(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline bool as_flag(const nlohmann::json& j, const std::string& path) {
  if (!j.is_boolean()) fail_field(path, "expected true or false");
  return j.get<bool>();
}

inline std::string as_text(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) fail_field(path, "expected a string");
  return j.get<std::string>();
}

inline Complex as_complex(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail_field(path, "expected a [re, im] pair");
  }
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline Vector as_state_vector(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    fail_field(path, "expected a non-empty array of [re, im] pairs");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        as_complex(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Matrix as_square_matrix(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    fail_field(path, "expected a non-empty array of rows");
  }
  const std::size_t n = j.size();
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != n) {
      fail_field(row_path, "expected a square matrix (row-major, " +
                               std::to_string(n) + " entries per row)");
    }
    for (std::size_t c = 0; c < n; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_complex(j[r][c], row_path + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline nlohmann::json complex_json(Complex z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

inline nlohmann::json state_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    out.push_back(row);
  }
  return out;
}

/// Scale a parsed state to unit norm, noting the adjustment. Zero-norm input
/// is a validation error on the named field.
inline Vector normalized_on_load(Vector v, const std::string& path,
                                 std::vector<std::string>& notes) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    fail_field(path, "state must have a positive finite norm");
  }
  if (std::abs(n - 1.0) > tol::state_norm) {
    v /= n;
    notes.push_back("normalized '" + path + "' (input norm " + number_text(n) + ")");
  }
  return v;
}

/// Parse a hermitian observable acting on `dim` basis states.
inline Matrix as_observable_matrix(const nlohmann::json& j,
                                   const std::string& path, std::size_t dim) {
  Matrix m = as_square_matrix(j, path);
  if (static_cast<std::size_t>(m.rows()) != dim) {
    fail_field(path, "matrix dimension " + std::to_string(m.rows()) +
                         " does not match the state dimension " +
                         std::to_string(dim));
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol::hermitian * scale) {
    fail_field(path, "matrix is not hermitian");
  }
  return m;
}

/// Reject boundary pairs with no overlap: every two-time construction in the
/// library conditions on both states, and an orthogonal pair admits none.
inline void require_boundary_overlap(const Vector& initial, const Vector& final_state) {
  if (std::abs(final_state.dot(initial)) <=
      tol::overlap_floor * initial.norm() * final_state.norm()) {
    fail_field("final_state", "orthogonal to the initial state, so no "
                              "two-boundary conditioning is possible");
  }
}

// ---------------------------------------------------------------------------
// Per-kind canonicalizers: validate the raw object and fill the echo
// ---------------------------------------------------------------------------

inline const std::vector<std::string> kCommonFields = {"kind", "name", "seed",
                                                       "output_path"};

inline std::vector<std::string> with_common(std::vector<std::string> extra) {
  extra.insert(extra.end(), kCommonFields.begin(), kCommonFields.end());
  return extra;
}

inline void canonicalize_boundary_query(const nlohmann::json& in,
                                        nlohmann::json& canon,
                                        std::vector<std::string>& notes,
                                        bool observable_list) {
  Vector initial = normalized_on_load(
      as_state_vector(require_member(in, "initial_state"), "initial_state"),
      "initial_state", notes);
  Vector final_state = normalized_on_load(
      as_state_vector(require_member(in, "final_state"), "final_state"),
      "final_state", notes);
  if (final_state.size() != initial.size()) {
    fail_field("final_state", "dimension " + std::to_string(final_state.size()) +
                                  " does not match initial_state dimension " +
                                  std::to_string(initial.size()));
  }
  if (initial.size() < 2) fail_field("initial_state", "needs dimension >= 2");
  require_boundary_overlap(initial, final_state);
  const std::size_t dim = static_cast<std::size_t>(initial.size());
  canon["initial_state"] = state_json(initial);
  canon["final_state"] = state_json(final_state);

  if (!observable_list) {
    canon["observable"] = matrix_json(as_observable_matrix(
        require_member(in, "observable"), "observable", dim));
    return;
  }
  const nlohmann::json& obs = require_member(in, "observables");
  if (!obs.is_array() || obs.empty()) {
    fail_field("observables", "expected a non-empty array of "
                              "{name, matrix} objects");
  }
  nlohmann::json list = nlohmann::json::array();
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string path = "observables[" + std::to_string(i) + "]";
    if (!obs[i].is_object()) fail_field(path, "expected a {name, matrix} object");
    check_known_fields(obs[i], {"name", "matrix"});
    const std::string obs_name =
        as_text(require_member(obs[i], "name"), path + ".name");
    if (obs_name.empty()) fail_field(path + ".name", "must be non-empty");
    if (std::find(seen.begin(), seen.end(), obs_name) != seen.end()) {
      fail_field(path + ".name", "duplicate observable name '" + obs_name + "'");
    }
    seen.push_back(obs_name);
    nlohmann::json entry;
    entry["name"] = obs_name;
    entry["matrix"] = matrix_json(as_observable_matrix(
        require_member(obs[i], "matrix"), path + ".matrix", dim));
    list.push_back(std::move(entry));
  }
  canon["observables"] = std::move(list);
}

inline void canonicalize_single(const nlohmann::json& in, nlohmann::json& canon,
                                std::vector<std::string>& notes) {
  check_known_fields(
      in, with_common({"upper_amplitude", "lower_amplitude", "final_particle",
                       "boundary_record", "epsilon_orth", "backward_environment",
                       "coupling_time", "decoherence_delay", "boundary_time"}));
  Complex upper(M_SQRT1_2, 0.0);
  Complex lower(M_SQRT1_2, 0.0);
  if (in.contains("upper_amplitude")) upper = as_complex(in["upper_amplitude"], "upper_amplitude");
  if (in.contains("lower_amplitude")) lower = as_complex(in["lower_amplitude"], "lower_amplitude");
  const double pnorm = std::sqrt(std::norm(upper) + std::norm(lower));
  if (!(pnorm > 0.0) || !std::isfinite(pnorm)) {
    fail_field("upper_amplitude", "initial amplitudes must have a positive finite norm");
  }
  if (std::abs(pnorm - 1.0) > tol::state_norm) {
    upper /= pnorm;
    lower /= pnorm;
    notes.push_back("normalized the initial amplitude pair (input norm " +
                    number_text(pnorm) + ")");
  }
  canon["upper_amplitude"] = complex_json(upper);
  canon["lower_amplitude"] = complex_json(lower);

  Vector fp(2);
  fp << Complex(1.0, 0.0), Complex(0.0, 0.0);
  if (in.contains("final_particle")) {
    fp = as_state_vector(in["final_particle"], "final_particle");
    if (fp.size() != 2) fail_field("final_particle", "needs exactly 2 entries");
    fp = normalized_on_load(std::move(fp), "final_particle", notes);
  }
  canon["final_particle"] = state_json(fp);

  std::uint64_t record = 0;
  if (in.contains("boundary_record")) record = as_count(in["boundary_record"], "boundary_record");
  if (record > 1) fail_field("boundary_record", "must be 0 or 1");
  canon["boundary_record"] = record;

  double eps = 0.0;
  if (in.contains("epsilon_orth")) eps = as_number(in["epsilon_orth"], "epsilon_orth");
  if (!(eps >= 0.0 && eps < 1.0)) fail_field("epsilon_orth", "must lie in [0, 1)");
  canon["epsilon_orth"] = eps;

  if (in.contains("backward_environment")) {
    Vector env = as_state_vector(in["backward_environment"], "backward_environment");
    if (env.size() != 8) {
      fail_field("backward_environment", "needs exactly 8 entries (a 3-qubit register)");
    }
    env = normalized_on_load(std::move(env), "backward_environment", notes);
    canon["backward_environment"] = state_json(env);
  }

  double t_couple = 1.0, t_delay = 0.5, t_boundary = 3.0;
  if (in.contains("coupling_time")) t_couple = as_number(in["coupling_time"], "coupling_time");
  if (in.contains("decoherence_delay")) t_delay = as_number(in["decoherence_delay"], "decoherence_delay");
  if (in.contains("boundary_time")) t_boundary = as_number(in["boundary_time"], "boundary_time");
  if (!(t_couple > 0.0)) fail_field("coupling_time", "must be positive");
  if (!(t_delay > 0.0)) fail_field("decoherence_delay", "must be positive");
  if (!(t_boundary > t_couple + t_delay)) {
    fail_field("boundary_time", "must exceed coupling_time + decoherence_delay");
  }
  canon["coupling_time"] = t_couple;
  canon["decoherence_delay"] = t_delay;
  canon["boundary_time"] = t_boundary;
}

inline void canonicalize_sequential(const nlohmann::json& in,
                                    nlohmann::json& canon,
                                    std::vector<std::string>& notes) {
  check_known_fields(
      in, with_common({"up_amplitude", "down_amplitude", "final_particle",
                       "first_record", "second_record", "first_coupling_time",
                       "second_coupling_time", "interaction_duration",
                       "decoherence_delay"}));
  Complex up(M_SQRT1_2, 0.0);
  Complex down(M_SQRT1_2, 0.0);
  if (in.contains("up_amplitude")) up = as_complex(in["up_amplitude"], "up_amplitude");
  if (in.contains("down_amplitude")) down = as_complex(in["down_amplitude"], "down_amplitude");
  const double pnorm = std::sqrt(std::norm(up) + std::norm(down));
  if (!(pnorm > 0.0) || !std::isfinite(pnorm)) {
    fail_field("up_amplitude", "initial amplitudes must have a positive finite norm");
  }
  if (std::abs(pnorm - 1.0) > tol::state_norm) {
    up /= pnorm;
    down /= pnorm;
    notes.push_back("normalized the initial amplitude pair (input norm " +
                    number_text(pnorm) + ")");
  }
  canon["up_amplitude"] = complex_json(up);
  canon["down_amplitude"] = complex_json(down);

  Vector fp(2);
  fp << Complex(M_SQRT1_2, 0.0), Complex(M_SQRT1_2, 0.0);
  if (in.contains("final_particle")) {
    fp = as_state_vector(in["final_particle"], "final_particle");
    if (fp.size() != 2) fail_field("final_particle", "needs exactly 2 entries");
    fp = normalized_on_load(std::move(fp), "final_particle", notes);
  }
  canon["final_particle"] = state_json(fp);

  std::uint64_t first = 0, second = 0;
  if (in.contains("first_record")) first = as_count(in["first_record"], "first_record");
  if (in.contains("second_record")) second = as_count(in["second_record"], "second_record");
  if (first > 1) fail_field("first_record", "must be 0 or 1");
  if (second > 1) fail_field("second_record", "must be 0 or 1");
  canon["first_record"] = first;
  canon["second_record"] = second;

  double t1 = 2.0, t2 = 6.0, ti = 1.0, td = 0.5;
  if (in.contains("first_coupling_time")) t1 = as_number(in["first_coupling_time"], "first_coupling_time");
  if (in.contains("second_coupling_time")) t2 = as_number(in["second_coupling_time"], "second_coupling_time");
  if (in.contains("interaction_duration")) ti = as_number(in["interaction_duration"], "interaction_duration");
  if (in.contains("decoherence_delay")) td = as_number(in["decoherence_delay"], "decoherence_delay");
  if (!(t1 > 0.0)) fail_field("first_coupling_time", "must be positive");
  if (!(ti > 0.0)) fail_field("interaction_duration", "must be positive");
  if (!(td > 0.0)) fail_field("decoherence_delay", "must be positive");
  if (!(t2 - t1 > ti + 2.0 * td)) {
    fail_field("second_coupling_time",
               "must exceed first_coupling_time + interaction_duration + "
               "2 * decoherence_delay");
  }
  canon["first_coupling_time"] = t1;
  canon["second_coupling_time"] = t2;
  canon["interaction_duration"] = ti;
  canon["decoherence_delay"] = td;
}

inline void canonicalize_signaling(const nlohmann::json& in,
                                   nlohmann::json& canon) {
  check_known_fields(in, with_common({"alice_acts"}));
  canon["alice_acts"] = as_flag(require_member(in, "alice_acts"), "alice_acts");
}

inline void canonicalize_born(const nlohmann::json& in, nlohmann::json& canon,
                              std::vector<std::string>& notes) {
  check_known_fields(in, with_common({"initial_state", "observable", "draws"}));
  Vector initial = normalized_on_load(
      as_state_vector(require_member(in, "initial_state"), "initial_state"),
      "initial_state", notes);
  if (initial.size() < 2) fail_field("initial_state", "needs dimension >= 2");
  canon["initial_state"] = state_json(initial);
  canon["observable"] = matrix_json(as_observable_matrix(
      require_member(in, "observable"), "observable",
      static_cast<std::size_t>(initial.size())));
  std::uint64_t draws = 100000;
  if (in.contains("draws")) draws = as_count(in["draws"], "draws");
  if (draws == 0) fail_field("draws", "must be at least 1");
  canon["draws"] = draws;
}

inline void canonicalize_sweep(const nlohmann::json& in, nlohmann::json& canon) {
  check_known_fields(in, with_common({"overlaps", "totals", "collapsed_counts"}));
  std::vector<double> overlaps = {0.3, 0.5, 0.9};
  std::vector<std::uint64_t> totals = {4, 6, 8, 10, 12};
  std::vector<std::uint64_t> counts = {1, 2};
  if (in.contains("overlaps")) {
    const nlohmann::json& j = in["overlaps"];
    if (!j.is_array() || j.empty()) fail_field("overlaps", "expected a non-empty array of numbers");
    overlaps.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string path = "overlaps[" + std::to_string(i) + "]";
      const double c = as_number(j[i], path);
      if (!(c >= 0.0 && c <= 1.0)) fail_field(path, "must lie in [0, 1]");
      overlaps.push_back(c);
    }
  }
  if (in.contains("totals")) {
    const nlohmann::json& j = in["totals"];
    if (!j.is_array() || j.empty()) fail_field("totals", "expected a non-empty array of integers");
    totals.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string path = "totals[" + std::to_string(i) + "]";
      const std::uint64_t n = as_count(j[i], path);
      if (n < 2) fail_field(path, "register needs at least 2 particles");
      totals.push_back(n);
    }
  }
  if (in.contains("collapsed_counts")) {
    const nlohmann::json& j = in["collapsed_counts"];
    if (!j.is_array() || j.empty()) fail_field("collapsed_counts", "expected a non-empty array of integers");
    counts.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      counts.push_back(as_count(j[i], "collapsed_counts[" + std::to_string(i) + "]"));
    }
  }
  const std::uint64_t min_total = *std::min_element(totals.begin(), totals.end());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] >= min_total) {
      fail_field("collapsed_counts[" + std::to_string(i) + "]",
                 "must stay below every register size (a macroscopic core "
                 "must survive)");
    }
  }
  canon["overlaps"] = overlaps;
  canon["totals"] = totals;
  canon["collapsed_counts"] = counts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// load_config
// ---------------------------------------------------------------------------

/// Validate raw structured text and produce the canonical config. `origin`
/// names the source in diagnostics (a path, or "<string>" for in-memory text).
inline ScenarioConfig load_config_text(const std::string& text,
                                       const std::string& origin = "<string>") {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string what = e.what();
    // Drop the "[json.exception...]" tag, keep the line/column diagnostics.
    if (auto pos = what.find("] "); pos != std::string::npos) {
      what = what.substr(pos + 2);
    }
    throw ConfigParseError("config " + what + " (in " + origin + ")");
  }
  if (!root.is_object()) {
    throw ConfigValidationError("config field '<root>': expected an object");
  }

  ScenarioConfig cfg;
  cfg.kind = parse_kind(
      detail::as_text(detail::require_member(root, "kind"), "kind"));
  cfg.name = to_string(cfg.kind);
  if (root.contains("name")) {
    cfg.name = detail::as_text(root["name"], "name");
    if (cfg.name.empty()) detail::fail_field("name", "must be non-empty");
  }
  if (root.contains("seed")) {
    cfg.seed = detail::as_count(root["seed"], "seed");
  } else if (cfg.kind == ScenarioKind::born_ensemble) {
    detail::fail_field("seed", "required for stochastic scenario kinds");
  }
  if (root.contains("output_path")) {
    cfg.output_path = detail::as_text(root["output_path"], "output_path");
  }

  nlohmann::json canon;
  canon["kind"] = to_string(cfg.kind);
  canon["name"] = cfg.name;
  if (cfg.seed) canon["seed"] = *cfg.seed;
  if (!cfg.output_path.empty()) canon["output_path"] = cfg.output_path;

  switch (cfg.kind) {
    case ScenarioKind::abl_query:
      detail::check_known_fields(root, detail::with_common({"initial_state",
                                                            "final_state",
                                                            "observable"}));
      detail::canonicalize_boundary_query(root, canon, cfg.notes, false);
      break;
    case ScenarioKind::weak_value_query:
      detail::check_known_fields(root, detail::with_common({"initial_state",
                                                            "final_state",
                                                            "observables"}));
      detail::canonicalize_boundary_query(root, canon, cfg.notes, true);
      break;
    case ScenarioKind::single_measurement:
      detail::canonicalize_single(root, canon, cfg.notes);
      break;
    case ScenarioKind::sequential_measurement:
      detail::canonicalize_sequential(root, canon, cfg.notes);
      break;
    case ScenarioKind::signaling:
      detail::canonicalize_signaling(root, canon);
      break;
    case ScenarioKind::born_ensemble:
      detail::canonicalize_born(root, canon, cfg.notes);
      break;
    case ScenarioKind::robustness_sweep:
      detail::canonicalize_sweep(root, canon);
      break;
  }
  cfg.canonical = std::move(canon);
  return cfg;
}

/// Read and validate a config file.
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Report model
// ---------------------------------------------------------------------------

/// One named table of scalar cells. The first table of a report is its
/// primary table (the one a CSV rendering keeps).
struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

/// One named pass/fail check with the observed value and the requirement it
/// was held against, both preformatted.
struct ReportCheck {
  std::string name;
  bool passed = false;
  std::string observed;
  std::string requirement;
};

/// Everything a scenario run produced. All fields except `duration_ms` are
/// deterministic functions of the canonical config.
struct ScenarioReport {
  std::string scenario_name;
  std::string kind;
  nlohmann::json config_echo;
  std::string prng_name;     // empty when the scenario is unseeded
  std::string prng_version;
  std::vector<ReportTable> tables;
  std::vector<ReportCheck> checks;
  std::vector<std::string> notes;
  double duration_ms = 0.0;
};

inline bool report_passed(const ScenarioReport& r) {
  return std::all_of(r.checks.begin(), r.checks.end(),
                     [](const ReportCheck& c) { return c.passed; });
}

namespace detail {

inline void add_check(ScenarioReport& r, std::string name, bool passed,
                      std::string observed, std::string requirement) {
  r.checks.push_back(ReportCheck{std::move(name), passed, std::move(observed),
                                 std::move(requirement)});
}

inline void add_distribution_table(ScenarioReport& r, std::string name,
                                   const OutcomeDistribution& dist) {
  ReportTable t;
  t.name = std::move(name);
  t.columns = {"eigenvalue", "probability"};
  for (std::size_t k = 0; k < dist.size(); ++k) {
    t.rows.push_back({dist.eigenvalue(k), dist.probability(k)});
  }
  r.tables.push_back(std::move(t));
}

// ---------------------------------------------------------------------------
// Per-kind runners
// ---------------------------------------------------------------------------

struct BoundaryQueryInputs {
  SubsystemLayout layout;
  Vector initial;
  Vector final_state;
};

inline BoundaryQueryInputs boundary_inputs(const nlohmann::json& canon) {
  Vector initial = as_state_vector(canon["initial_state"], "initial_state");
  Vector final_state = as_state_vector(canon["final_state"], "final_state");
  SubsystemLayout layout(
      {{"system", static_cast<std::size_t>(initial.size())}});
  return BoundaryQueryInputs{std::move(layout), std::move(initial),
                             std::move(final_state)};
}

inline void run_abl_query(const nlohmann::json& canon, ScenarioReport& r) {
  BoundaryQueryInputs in = boundary_inputs(canon);
  OperatorMatrix observable(in.layout,
                            as_square_matrix(canon["observable"], "observable"),
                            {.hermitian = true});
  OutcomeDistribution dist =
      abl_probability(PureState(in.layout, in.initial),
                      PureState(in.layout, in.final_state), observable);
  add_distribution_table(r, "distribution", dist);
  double sum = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) sum += dist.probability(k);
  const double residual = std::abs(sum - 1.0);
  add_check(r, "probabilities_sum_to_one", residual <= tol::distribution,
            number_text(residual), "<= " + number_text(tol::distribution));
}

inline void run_weak_value_query(const nlohmann::json& canon,
                                 ScenarioReport& r) {
  BoundaryQueryInputs in = boundary_inputs(canon);
  TwoState ts(PureState(in.layout, in.initial),
              PureState(in.layout, in.final_state));
  ReportTable values;
  values.name = "weak_values";
  values.columns = {"observable", "real", "imag"};
  for (const auto& entry : canon["observables"]) {
    OperatorMatrix observable(
        in.layout, as_square_matrix(entry["matrix"], "matrix"),
        {.hermitian = true});
    const Complex w = weak_value(ts, observable);
    values.rows.push_back(
        {entry["name"].get<std::string>(), w.real(), w.imag()});
  }
  r.tables.push_back(std::move(values));

  const Complex overlap = ts.overlap();
  ReportTable ov;
  ov.name = "boundary_overlap";
  ov.columns = {"real", "imag"};
  ov.rows.push_back({overlap.real(), overlap.imag()});
  r.tables.push_back(std::move(ov));

  add_check(r, "boundary_overlap_above_floor",
            std::abs(overlap) > tol::overlap_floor, number_text(std::abs(overlap)),
            "> " + number_text(tol::overlap_floor));
}

inline void fill_branch_report(ScenarioReport& r, const BranchReport& br,
                               std::size_t asserted_record) {
  ReportTable weights;
  weights.name = "branch_weights";
  weights.columns = {"branch", "weight", "selected"};
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < br.selection.branch_weights.size(); ++k) {
    weight_sum += br.selection.branch_weights[k];
    weights.rows.push_back(
        {k, br.selection.branch_weights[k], k == br.selection.selected});
  }
  r.tables.push_back(std::move(weights));

  ReportTable windows;
  windows.name = "windows";
  windows.columns = {"window", "selected_weight", "residual_weight"};
  double max_selected = 0.0;
  double max_residual = 0.0;
  for (const WindowReport& w : br.windows) {
    windows.rows.push_back({w.label, w.selected_weight, w.residual_weight});
    max_selected = std::max(max_selected, w.selected_weight);
    max_residual = std::max(max_residual, w.residual_weight);
  }
  r.tables.push_back(std::move(windows));

  for (const WindowReport& w : br.windows) {
    ReportTable m;
    m.name = "reduced_" + w.label;
    m.columns = {"row", "col", "real", "imag"};
    const Matrix& mat = w.reduced.matrix();
    for (Eigen::Index row = 0; row < mat.rows(); ++row) {
      for (Eigen::Index col = 0; col < mat.cols(); ++col) {
        m.rows.push_back({static_cast<std::int64_t>(row),
                          static_cast<std::int64_t>(col), mat(row, col).real(),
                          mat(row, col).imag()});
      }
    }
    r.tables.push_back(std::move(m));
  }

  ReportTable records;
  records.name = "backward_records";
  records.columns = {"pointer", "record", "ready_coefficient",
                     "orthogonal_coefficient"};
  for (const BackwardRecord& rec : br.backward_records) {
    records.rows.push_back({rec.pointer_label, rec.record,
                            rec.ready_coefficient, rec.orthogonal_coefficient});
  }
  r.tables.push_back(std::move(records));

  add_check(r, "branch_weights_sum_to_one",
            std::abs(weight_sum - 1.0) <= tol::distribution,
            number_text(std::abs(weight_sum - 1.0)),
            "<= " + number_text(tol::distribution));
  add_check(r, "boundary_selects_asserted_record",
            br.selection.selected == asserted_record,
            "branch " + std::to_string(br.selection.selected),
            "branch " + std::to_string(asserted_record));
  add_check(r, "window_weights_within_unit_range", max_selected <= 1.0 + 1e-12,
            number_text(max_selected), "<= 1");
}

inline double max_window_residual(const BranchReport& br) {
  double m = 0.0;
  for (const WindowReport& w : br.windows) m = std::max(m, w.residual_weight);
  return m;
}

inline void run_single_measurement_scenario(const nlohmann::json& canon,
                                            ScenarioReport& r) {
  SingleMeasurementSetup s;
  s.upper_amplitude = as_complex(canon["upper_amplitude"], "upper_amplitude");
  s.lower_amplitude = as_complex(canon["lower_amplitude"], "lower_amplitude");
  Vector fp = as_state_vector(canon["final_particle"], "final_particle");
  s.final_particle << fp(0), fp(1);
  s.boundary_record = canon["boundary_record"].get<std::size_t>();
  s.epsilon_orth = canon["epsilon_orth"].get<double>();
  if (canon.contains("backward_environment")) {
    s.backward_environment =
        as_state_vector(canon["backward_environment"], "backward_environment");
  }
  s.coupling_time = canon["coupling_time"].get<double>();
  s.decoherence_delay = canon["decoherence_delay"].get<double>();
  s.boundary_time = canon["boundary_time"].get<double>();

  BranchReport br = run_single_measurement(s);
  fill_branch_report(r, br, s.boundary_record);
}

inline void run_sequential_measurement_scenario(const nlohmann::json& canon,
                                                ScenarioReport& r) {
  SequentialMeasurementSetup s;
  s.up_amplitude = as_complex(canon["up_amplitude"], "up_amplitude");
  s.down_amplitude = as_complex(canon["down_amplitude"], "down_amplitude");
  Vector fp = as_state_vector(canon["final_particle"], "final_particle");
  s.final_particle << fp(0), fp(1);
  s.first_record = canon["first_record"].get<std::size_t>();
  s.second_record = canon["second_record"].get<std::size_t>();
  s.first_coupling_time = canon["first_coupling_time"].get<double>();
  s.second_coupling_time = canon["second_coupling_time"].get<double>();
  s.interaction_duration = canon["interaction_duration"].get<double>();
  s.decoherence_delay = canon["decoherence_delay"].get<double>();

  BranchReport br = run_sequential_measurement(s);
  fill_branch_report(r, br, s.second_record);
  const double residual = max_window_residual(br);
  add_check(r, "sharp_records_leave_no_residual", residual <= tol::distribution,
            number_text(residual), "<= " + number_text(tol::distribution));
}

inline void run_signaling_scenario(const nlohmann::json& canon,
                                   ScenarioReport& r) {
  const SignalingResult res = run_signaling_demo(canon["alice_acts"].get<bool>());

  ReportTable conditional;
  conditional.name = "conditional_distribution";
  conditional.columns = {"eigenvalue", "probability"};
  conditional.rows.push_back({-1.0, res.down_probability});
  conditional.rows.push_back({1.0, res.up_probability});
  r.tables.push_back(std::move(conditional));

  ReportTable marginal;
  marginal.name = "marginal_distribution";
  marginal.columns = {"eigenvalue", "probability"};
  marginal.rows.push_back({-1.0, res.marginal_down});
  marginal.rows.push_back({1.0, res.marginal_up});
  r.tables.push_back(std::move(marginal));

  ReportTable outcome;
  outcome.name = "outcome";
  outcome.columns = {"alice_acted", "outcome"};
  outcome.rows.push_back({res.alice_acted, res.outcome});
  r.tables.push_back(std::move(outcome));

  const double determinism = 1.0 - std::max(res.up_probability, res.down_probability);
  add_check(r, "conditional_outcome_is_deterministic", determinism <= 1e-12,
            number_text(determinism), "<= 1e-12");
  const double marginal_dev =
      std::max(std::abs(res.marginal_up - 0.5), std::abs(res.marginal_down - 0.5));
  add_check(r, "boundary_averaged_marginal_is_even",
            marginal_dev <= tol::distribution, number_text(marginal_dev),
            "<= " + number_text(tol::distribution));
}

inline void run_born_ensemble_scenario(const nlohmann::json& canon,
                                       ScenarioReport& r) {
  Vector initial = as_state_vector(canon["initial_state"], "initial_state");
  SubsystemLayout layout({{"system", static_cast<std::size_t>(initial.size())}});
  OperatorMatrix observable(layout,
                            as_square_matrix(canon["observable"], "observable"),
                            {.hermitian = true});
  const std::uint64_t draws = canon["draws"].get<std::uint64_t>();
  const std::uint64_t seed = canon["seed"].get<std::uint64_t>();
  const PureState state(layout, initial);

  const OutcomeDistribution dist = born_probability(state, observable);
  const EnsembleSample sample = sample_final_states(state, observable, draws, seed);

  add_distribution_table(r, "distribution", dist);
  ReportTable counts;
  counts.name = "counts";
  counts.columns = {"eigenvalue", "count", "expected"};
  std::vector<double> probs(dist.size());
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    probs[k] = dist.probability(k);
    total += sample.counts[k];
    counts.rows.push_back({dist.eigenvalue(k), sample.counts[k],
                           static_cast<double>(draws) * dist.probability(k)});
  }
  r.tables.push_back(std::move(counts));

  const double statistic = chi_square_statistic(sample.counts, probs);
  std::size_t support = 0;
  for (double p : probs) support += (p > 0.0) ? 1 : 0;
  const std::size_t dof = support > 0 ? support - 1 : 0;
  double p_value = 1.0;
  if (dof >= 1) p_value = chi_square_pvalue(statistic, dof);

  ReportTable stats;
  stats.name = "fit";
  stats.columns = {"chi_square", "degrees_of_freedom", "p_value"};
  stats.rows.push_back({statistic, dof, p_value});
  r.tables.push_back(std::move(stats));

  add_check(r, "counts_total_matches_draws", total == draws,
            std::to_string(total), "== " + std::to_string(draws));
  if (dof >= 1) {
    add_check(r, "chi_square_p_value_not_extreme", p_value >= 1e-3,
              number_text(p_value), ">= 0.001");
  } else {
    add_check(r, "chi_square_p_value_not_extreme", true,
              "single-outcome distribution", "no test needed");
  }
}

/// Sweep rows for the given grids. jobs > 1 computes rows concurrently; each
/// row is an independent closed computation, and rows are merged by grid
/// index, so the result is identical to the serial path.
inline std::vector<RobustnessSweepRow> sweep_rows_parallel(
    const std::vector<double>& overlaps, const std::vector<std::size_t>& totals,
    const std::vector<std::size_t>& counts, unsigned jobs) {
  if (jobs <= 1) return sweep_robustness(overlaps, totals, counts);
  if (overlaps.empty() || totals.empty() || counts.empty()) {
    throw std::invalid_argument("sweep grids must be nonempty");
  }
  for (std::size_t n_total : totals) {
    for (std::size_t n_collapsed : counts) {
      if (n_collapsed >= n_total) {
        throw std::invalid_argument("macroscopic core violated");
      }
    }
  }
  const std::size_t total_rows = overlaps.size() * totals.size() * counts.size();
  std::vector<RobustnessSweepRow> rows(total_rows);
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&](unsigned worker_index) {
    for (std::size_t i = worker_index; i < total_rows; i += jobs) {
      const std::size_t ic = i / (totals.size() * counts.size());
      const std::size_t in_ = (i / counts.size()) % totals.size();
      const std::size_t ik = i % counts.size();
      try {
        ProductEnvironment env =
            ProductEnvironment::uniform(totals[in_], overlaps[ic]);
        RobustnessRatio ratio = robustness_ratio(
            env, CollapseRecord::toward_first_branch(env, counts[ik]));
        if (ratio.exact.diverges) {
          throw std::domain_error(
              "sweep produced a divergent ratio; overlaps must be positive");
        }
        rows[i] = RobustnessSweepRow{overlaps[ic], totals[in_], counts[ik],
                                     ratio.exact.log10, ratio.approximate.log10};
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker, t);
  for (std::thread& t : pool) t.join();
  if (!first_error.empty()) throw std::domain_error(first_error);
  return rows;
}

inline void run_robustness_sweep_scenario(const nlohmann::json& canon,
                                          ScenarioReport& r, unsigned jobs) {
  const std::vector<double> overlaps =
      canon["overlaps"].get<std::vector<double>>();
  const std::vector<std::size_t> totals =
      canon["totals"].get<std::vector<std::size_t>>();
  const std::vector<std::size_t> counts =
      canon["collapsed_counts"].get<std::vector<std::size_t>>();

  const std::vector<RobustnessSweepRow> rows =
      sweep_rows_parallel(overlaps, totals, counts, jobs);

  ReportTable sweep;
  sweep.name = "sweep";
  sweep.columns = {"c", "N", "n", "log10_ratio_exact", "log10_ratio_approx"};
  for (const RobustnessSweepRow& row : rows) {
    sweep.rows.push_back({row.c, row.n_total, row.n_collapsed,
                          row.log10_ratio_exact, row.log10_ratio_approx});
  }
  r.tables.push_back(std::move(sweep));

  // Per-(c, n) straight-line fit of the exact log-ratio against register
  // size: slope must equal -2*log10(c), with negligible fit residual.
  double max_slope_dev = 0.0;
  double max_fit_residual = 0.0;
  double max_monotone_drop = 0.0;
  bool enough_points = totals.size() >= 2;
  for (std::size_t ic = 0; ic < overlaps.size(); ++ic) {
    for (std::size_t ik = 0; ik < counts.size(); ++ik) {
      std::vector<double> xs, ys;
      for (std::size_t in_ = 0; in_ < totals.size(); ++in_) {
        const RobustnessSweepRow& row =
            rows[(ic * totals.size() + in_) * counts.size() + ik];
        xs.push_back(static_cast<double>(row.n_total));
        ys.push_back(row.log10_ratio_exact);
        if (in_ > 0) {
          const double prev =
              rows[(ic * totals.size() + in_ - 1) * counts.size() + ik]
                  .log10_ratio_exact;
          max_monotone_drop = std::max(max_monotone_drop, prev - row.log10_ratio_exact);
        }
      }
      if (xs.size() < 2) continue;
      double mean_x = 0.0, mean_y = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
      }
      mean_x /= static_cast<double>(xs.size());
      mean_y /= static_cast<double>(xs.size());
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
      }
      const double slope = sxy / sxx;
      const double intercept = mean_y - slope * mean_x;
      const double predicted = -2.0 * std::log10(overlaps[ic]);
      max_slope_dev = std::max(max_slope_dev, std::abs(slope - predicted));
      for (std::size_t i = 0; i < xs.size(); ++i) {
        max_fit_residual = std::max(
            max_fit_residual, std::abs(ys[i] - (slope * xs[i] + intercept)));
      }
    }
  }
  if (enough_points) {
    add_check(r, "growth_slope_matches_overlap_decay", max_slope_dev <= 1e-9,
              number_text(max_slope_dev), "<= 1e-09");
    add_check(r, "growth_is_linear_in_register_size", max_fit_residual <= 1e-9,
              number_text(max_fit_residual), "<= 1e-09");
  } else {
    add_check(r, "growth_slope_matches_overlap_decay", true,
              "fewer than two register sizes", "no fit possible");
    add_check(r, "growth_is_linear_in_register_size", true,
              "fewer than two register sizes", "no fit possible");
  }
  add_check(r, "exact_ratio_monotone_in_register_size",
            max_monotone_drop <= 1e-12, number_text(max_monotone_drop),
            "<= 1e-12");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Execute a validated config. Module errors do not propagate: they are
/// recorded as a failed `scenario_completed` check so the report (and its
/// exit-code mapping) stays structured. `jobs` parallelizes independent
/// sweep rows only; every other kind ignores it, and the report bytes are
/// identical for every jobs value.
inline ScenarioReport run(const ScenarioConfig& cfg, unsigned jobs = 1) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioReport report;
  report.scenario_name = cfg.name;
  report.kind = to_string(cfg.kind);
  report.config_echo = cfg.canonical;
  report.notes = cfg.notes;
  if (cfg.seed) {
    report.prng_name = prng::name;
    report.prng_version = prng::version;
  }
  bool completed = false;
  std::string failure;
  try {
    switch (cfg.kind) {
      case ScenarioKind::abl_query:
        detail::run_abl_query(cfg.canonical, report);
        break;
      case ScenarioKind::weak_value_query:
        detail::run_weak_value_query(cfg.canonical, report);
        break;
      case ScenarioKind::single_measurement:
        detail::run_single_measurement_scenario(cfg.canonical, report);
        break;
      case ScenarioKind::sequential_measurement:
        detail::run_sequential_measurement_scenario(cfg.canonical, report);
        break;
      case ScenarioKind::signaling:
        detail::run_signaling_scenario(cfg.canonical, report);
        break;
      case ScenarioKind::born_ensemble:
        detail::run_born_ensemble_scenario(cfg.canonical, report);
        break;
      case ScenarioKind::robustness_sweep:
        detail::run_robustness_sweep_scenario(cfg.canonical, report, jobs);
        break;
    }
    completed = true;
  } catch (const std::exception& e) {
    failure = e.what();
  }
  detail::add_check(report, "scenario_completed", completed,
                    completed ? "ok" : failure, "no module errors");
  report.duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                start)
          .count();
  return report;
}

// ---------------------------------------------------------------------------
// emit_report
// ---------------------------------------------------------------------------

namespace detail {

inline std::string cell_text(const nlohmann::json& cell) {
  if (cell.is_string()) return cell.get<std::string>();
  return cell.dump();
}

inline std::string join_cells(const std::vector<nlohmann::json>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) line += ',';
    line += cell_text(cells[i]);
  }
  return line;
}

inline std::string join_columns(const std::vector<std::string>& cols) {
  std::string line;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) line += ',';
    line += cols[i];
  }
  return line;
}

}  // namespace detail

/// Render a report. Formats: "text" (all tables and checks), "csv" (the
/// primary table only), "json-lines" (one object per row, then one per
/// check). Every format is byte-stable for a fixed config and seed: the only
/// run-dependent value, the wall-clock duration, goes on the final metadata
/// line, which data_section() strips.
inline std::string emit_report(const ScenarioReport& r,
                               const std::string& format) {
  std::string out;
  const std::string meta =
      "duration_ms=" + detail::number_text(r.duration_ms);
  if (format == "text") {
    out += "# scenario " + r.scenario_name + "\n";
    out += "# kind " + r.kind + "\n";
    if (!r.prng_name.empty()) {
      out += "# prng " + r.prng_name + " version " + r.prng_version + "\n";
    }
    out += "# config " + r.config_echo.dump() + "\n";
    for (const std::string& note : r.notes) out += "# note " + note + "\n";
    for (const ReportTable& t : r.tables) {
      out += "# table " + t.name + "\n";
      out += detail::join_columns(t.columns) + "\n";
      for (const auto& row : t.rows) out += detail::join_cells(row) + "\n";
    }
    out += "# checks\n";
    for (const ReportCheck& c : r.checks) {
      out += std::string(c.passed ? "ok " : "FAIL ") + c.name +
             " observed=" + c.observed + " require=" + c.requirement + "\n";
    }
    out += "# meta " + meta + "\n";
    return out;
  }
  if (format == "csv") {
    if (!r.tables.empty()) {
      const ReportTable& t = r.tables.front();
      out += detail::join_columns(t.columns) + "\n";
      for (const auto& row : t.rows) out += detail::join_cells(row) + "\n";
    }
    out += "# meta " + meta + "\n";
    return out;
  }
  if (format == "json-lines") {
    nlohmann::json header;
    header["scenario"] = r.scenario_name;
    header["kind"] = r.kind;
    header["config"] = r.config_echo;
    if (!r.prng_name.empty()) {
      header["prng"] = {{"name", r.prng_name}, {"version", r.prng_version}};
    }
    out += header.dump() + "\n";
    for (const std::string& note : r.notes) {
      out += nlohmann::json{{"note", note}}.dump() + "\n";
    }
    for (const ReportTable& t : r.tables) {
      for (const auto& row : t.rows) {
        nlohmann::json obj;
        obj["table"] = t.name;
        for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = row[i];
        out += obj.dump() + "\n";
      }
    }
    for (const ReportCheck& c : r.checks) {
      nlohmann::json obj;
      obj["check"] = c.name;
      obj["passed"] = c.passed;
      obj["observed"] = c.observed;
      obj["require"] = c.requirement;
      out += obj.dump() + "\n";
    }
    out += nlohmann::json{{"meta", {{"duration_ms", r.duration_ms}}}}.dump() + "\n";
    return out;
  }
  throw std::invalid_argument("unknown report format '" + format +
                              "' (expected text, csv, or json-lines)");
}

/// Everything in a rendered report except metadata lines: the part that must
/// be byte-identical across repeated runs.
inline std::string data_section(const std::string& rendered) {
  std::string out;
  std::size_t pos = 0;
  while (pos < rendered.size()) {
    std::size_t end = rendered.find('\n', pos);
    if (end == std::string::npos) end = rendered.size();
    const std::string line = rendered.substr(pos, end - pos);
    const bool meta = line.rfind("# meta ", 0) == 0 ||
                      line.rfind("{\"meta\"", 0) == 0;
    if (!meta) out += line + "\n";
    pos = end + 1;
  }
  return out;
}

/// Write rendered output to a file, failing loudly on an unwritable path.
inline void write_report_file(const std::string& rendered,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open report path '" + path +
                             "' for writing");
  }
  out << rendered;
  out.flush();
  if (!out) {
    throw std::runtime_error("failed while writing report to '" + path + "'");
  }
}

}  // namespace tsvf
