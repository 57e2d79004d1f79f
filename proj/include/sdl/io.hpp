#pragma once
//! \file
//! \brief JSON file formats (instances, fields, flows, plans, Beckmann
//! solutions, equivalence reports) and the report CSV row.
//!
//! Numbers are read either as JSON numbers or as strings holding exact
//! rationals "p/q". Any rational string switches an instance to exact mode.
//! Exact values are written back as strings, floating values as JSON numbers
//! (shortest round-trip form).

#include "sdl/beckmann.hpp"
#include "sdl/currents.hpp"
#include "sdl/normed.hpp"
#include "sdl/sobolev.hpp"
#include "sdl/space.hpp"
#include "sdl/superposition.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdl::io {

using json = nlohmann::json;

inline constexpr const char* report_schema = "sdl-equivalence-report/1";

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact value of a JSON number or rational string; flags string input.
inline Rational read_number(const json& j, bool* rational_seen = nullptr) {
  if (j.is_number()) {
    const double d = j.get<double>();
    if (!std::isfinite(d)) throw FormatError("nonfinite number");
    return Rational(d);
  }
  if (j.is_string()) {
    if (rational_seen) *rational_seen = true;
    try {
      return parse_rational(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
  throw FormatError("expected a number or a rational string, got " + j.dump());
}

inline std::vector<Rational> read_numbers(const json& j, bool* rational_seen = nullptr) {
  if (!j.is_array()) throw FormatError("expected an array of numbers");
  std::vector<Rational> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(read_number(x, rational_seen));
  return out;
}

inline std::vector<double> to_doubles(const std::vector<Rational>& x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (const auto& v : x) out.push_back(to_double(v));
  return out;
}

template <class S>
json write_number(const S& x) {
  if constexpr (is_exact_v<S>)
    return x.str();
  else
    return x;
}

template <class S>
json write_numbers(const std::vector<S>& xs) {
  json a = json::array();
  for (const auto& x : xs) a.push_back(write_number(x));
  return a;
}

inline json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Norm

inline json norm_to_json(const Norm& norm) {
  json j;
  j["family"] = norm.family() == Norm::Family::lr ? "lr" : "weighted-lr";
  if (std::isinf(norm.exponent()))
    j["r"] = "inf";
  else
    j["r"] = norm.exponent();
  j["weights"] = norm.weights();
  return j;
}

inline Norm norm_from_json(const json& j, std::size_t dim) {
  if (!j.is_object()) throw FormatError("norm must be an object");
  const std::string family = j.value("family", "lr");
  double r = 2.0;
  if (j.contains("r")) {
    const auto& jr = j.at("r");
    if (jr.is_string() && (jr == "inf" || jr == "infinity"))
      r = std::numeric_limits<double>::infinity();
    else
      r = to_double(read_number(jr));
  }
  if (family == "lr") {
    if (j.contains("weights") && !j.at("weights").empty()) {
      for (const auto& w : j.at("weights"))
        if (to_double(read_number(w)) != 1.0) throw FormatError("family 'lr' takes unit weights; use 'weighted-lr'");
    }
    return Norm::lr(dim, r);
  }
  if (family == "weighted-lr") {
    auto w = to_doubles(read_numbers(j.at("weights")));
    if (w.size() != dim) throw FormatError("norm weights do not match dim");
    return Norm::weighted_lr(r, std::move(w));
  }
  throw FormatError("unknown norm family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Instance

struct LoadedInstance {
  Instance<Rational> exact;
  Instance<double> numeric;
  bool rational = false;  ///< some number was given as a rational string
};

inline LoadedInstance instance_from_json(const json& j) {
  try {
    if (!j.is_object()) throw FormatError("instance must be an object");
    const std::size_t dim = j.at("dim").get<std::size_t>();
    Norm norm = norm_from_json(j.at("norm"), dim);
    bool rational = false;
    std::vector<VertexData<Rational>> vs;
    for (const auto& jv : j.at("vertices")) {
      VertexData<Rational> v;
      v.x = to_doubles(read_numbers(jv.at("x"), nullptr));
      v.atom = jv.contains("atom") ? read_number(jv.at("atom"), &rational) : Rational(0);
      vs.push_back(std::move(v));
    }
    std::vector<EdgeSpec<Rational>> es;
    for (const auto& je : j.at("edges")) {
      EdgeSpec<Rational> e;
      e.tail = je.at("tail").get<std::size_t>();
      e.head = je.at("head").get<std::size_t>();
      e.density = je.contains("w") ? read_number(je.at("w"), &rational) : Rational(1);
      if (je.contains("length") && !je.at("length").is_null()) e.length = read_number(je.at("length"), &rational);
      es.push_back(std::move(e));
    }
    Instance<Rational> exact(std::move(norm), std::move(vs), es);
    Instance<double> numeric = exact.cast<double>();
    return LoadedInstance{std::move(exact), std::move(numeric), rational};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed instance: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed instance: ") + e.what());
  }
}

template <class S>
json instance_to_json(const Instance<S>& inst) {
  json j;
  j["dim"] = inst.dimension();
  j["norm"] = norm_to_json(inst.norm());
  json vs = json::array();
  for (const auto& v : inst.vertices()) vs.push_back({{"x", v.x}, {"atom", write_number(v.atom)}});
  j["vertices"] = std::move(vs);
  json es = json::array();
  for (const auto& e : inst.edges())
    es.push_back({{"tail", e.tail}, {"head", e.head}, {"w", write_number(e.density)}, {"length", write_number(e.length)}});
  j["edges"] = std::move(es);
  return j;
}

// ---------------------------------------------------------------------------
// Fields, flows, plans

/// {"values": [...]}; `key` selects "J", "L", ... for the other vector files.
inline std::vector<Rational> values_from_json(const json& j, const std::string& key, std::size_t expected,
                                              bool* rational_seen = nullptr) {
  if (!j.is_object() || !j.contains(key)) throw FormatError("expected an object with key '" + key + "'");
  auto v = read_numbers(j.at(key), rational_seen);
  if (v.size() != expected)
    throw FormatError("'" + key + "' has " + std::to_string(v.size()) + " entries, expected " + std::to_string(expected));
  return v;
}

template <class S>
json values_to_json(const std::vector<S>& values, const std::string& key = "values") {
  return json{{key, write_numbers(values)}};
}

template <class S>
json plan_to_json(const Plan<S>& plan) {
  json paths = json::array();
  for (const auto& P : plan.paths) paths.push_back({{"vertices", P.vertices}, {"weight", write_number(P.weight)}});
  return json{{"paths", std::move(paths)}};
}

template <class S>
Plan<S> plan_from_json(const Instance<S>& inst, const json& j) {
  try {
    Plan<S> plan;
    for (const auto& jp : j.at("paths")) {
      const Rational w = read_number(jp.at("weight"));
      S weight;
      if constexpr (is_exact_v<S>)
        weight = w;
      else
        weight = to_double(w);
      plan.paths.push_back(make_path(inst, jp.at("vertices").get<std::vector<std::size_t>>(), weight));
    }
    validate_plan(inst, plan);
    return plan;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed plan: ") + e.what());
  }
}

inline json solution_to_json(const BeckmannSolution& sol) {
  return json{{"L", sol.L.values},         {"u", sol.u.values}, {"value", sol.value},
              {"residual", sol.residual}, {"gap", sol.gap},    {"iterations", sol.iterations}};
}

// ---------------------------------------------------------------------------
// Reports

inline json report_to_json(const EquivalenceReport& r, const std::string& instance_label, std::size_t field_index) {
  json j;
  j["schema"] = report_schema;
  j["instance"] = instance_label;
  j["field_index"] = field_index;
  j["p"] = r.p;
  j["q"] = r.q;
  j["rel_tol"] = r.rel_tol;
  j["F"] = r.F;
  j["E_lip"] = r.E_lip;
  j["E_H_level"] = r.relaxation.E_H_level;
  j["E_H"] = r.relaxation.E_H;
  j["E_W"] = r.E_W;
  json seq = json::array();
  for (const auto& lv : r.relaxation.levels)
    seq.push_back({{"k", lv.k}, {"value", lv.value}, {"factor", lv.factor}, {"flattened", lv.flattened}});
  j["relax_sequence"] = std::move(seq);
  j["chain"] = r.chain.values;
  j["chain_tolerance"] = r.chain.tolerance;
  j["beckmann"] = {{"iterations", r.chain.conjugate.iterations},
                   {"residual", r.chain.conjugate.residual},
                   {"gap", r.chain.conjugate.gap},
                   {"value", r.chain.conjugate.value}};
  j["plan"] = {{"paths", r.chain.plan.plan.size()},
               {"cycle_cancellations", r.chain.plan.split.cancellations},
               {"bar_norm", r.chain.plan.bar_norm},
               {"L_norm", r.chain.plan.L_norm}};
  j["weak_gradient"] = r.weak_gradient;
  json verdicts = json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"measured", v.measured}, {"threshold", v.threshold}});
  j["verdicts"] = std::move(verdicts);
  j["failed"] = r.failed();
  j["passed"] = r.passed();
  return j;
}

/// Report record for a run whose pipeline raised an error.
inline json failed_report_json(const std::string& instance_label, std::size_t field_index, double p,
                               const std::string& flag, const std::string& message) {
  json j;
  j["schema"] = report_schema;
  j["instance"] = instance_label;
  j["field_index"] = field_index;
  j["p"] = p;
  j["q"] = conjugate_exponent(p);
  j["error"] = message;
  j["verdicts"] = json::array({{{"name", flag}, {"passed", false}}});
  j["failed"] = json::array({flag});
  j["passed"] = false;
  return j;
}

inline const std::vector<std::string>& report_csv_columns() {
  static const std::vector<std::string> cols{"run",   "field_index", "instance",  "p",         "q",
                                            "F",     "E_lip",       "E_H_level", "E_H",       "E_W",
                                            "chain1", "chain2",     "chain3",    "chain4",    "beckmann_iterations",
                                            "beckmann_residual", "beckmann_gap", "passed", "failed"};
  return cols;
}

inline std::string format_g12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string report_csv_header() {
  std::string line;
  for (const auto& c : report_csv_columns()) line += (line.empty() ? "" : ",") + c;
  return line + "\n";
}

/// One CSV row; numeric cells with 12 significant digits, blank when absent.
inline std::string report_csv_row(const json& r, const std::string& run) {
  auto num = [&](const json& v) { return v.is_number() ? format_g12(v.get<double>()) : std::string(); };
  auto field = [&](const char* key) { return r.contains(key) ? num(r.at(key)) : std::string(); };
  std::vector<std::string> cells;
  cells.push_back(csv_escape(run));
  cells.push_back(r.contains("field_index") ? std::to_string(r.at("field_index").get<std::size_t>()) : "");
  cells.push_back(csv_escape(r.value("instance", "")));
  for (const char* key : {"p", "q", "F", "E_lip", "E_H_level", "E_H", "E_W"}) cells.push_back(field(key));
  for (std::size_t i = 0; i < 4; ++i)
    cells.push_back(r.contains("chain") && r.at("chain").size() == 4 ? num(r.at("chain")[i]) : "");
  const json& b = r.contains("beckmann") ? r.at("beckmann") : json::object();
  cells.push_back(b.contains("iterations") ? std::to_string(b.at("iterations").get<long long>()) : "");
  cells.push_back(b.contains("residual") ? num(b.at("residual")) : "");
  cells.push_back(b.contains("gap") ? num(b.at("gap")) : "");
  cells.push_back(r.value("passed", false) ? "true" : "false");
  std::string failed;
  if (r.contains("failed"))
    for (const auto& f : r.at("failed")) failed += (failed.empty() ? "" : ";") + f.get<std::string>();
  cells.push_back(csv_escape(failed));
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
  return line + "\n";
}

/// Schema check used by report aggregation.
inline bool is_report_record(const json& j) {
  return j.is_object() && j.contains("schema") && j.at("schema") == report_schema && j.contains("passed") &&
         j.contains("p") && j.contains("verdicts");
}

}  // namespace sdl::io
