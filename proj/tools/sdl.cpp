// sdl: command-line front end for instance generation, Beckmann solves,
// flow decomposition, equivalence verification and report aggregation.
//
// Exit codes: 0 pass, 1 verdict failure or non-convergence, 2 usage or IO.

#include "sdl/io.hpp"
#include "sdl/sdl.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using sdl::io::json;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;

/// Raised for bad arguments detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::string format = "json";
  std::string output;
};

void add_common(CLI::App* cmd, Common& c, std::vector<std::string> formats) {
  cmd->add_option("--tol", c.tol, "tolerance (0: command default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember(std::move(formats)));
  cmd->add_option("-o,--output", c.output, "output file (default: stdout)");
}

void emit(const Common& c, const std::string& text) {
  if (c.output.empty())
    std::cout << text;
  else
    sdl::io::write_text_file(c.output, text);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<double> doubles(const std::vector<sdl::Rational>& x) { return sdl::io::to_doubles(x); }

std::string label_of(const std::string& path) { return fs::path(path).filename().string(); }

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  Common common;
  std::string topology = "path";
  std::size_t n = 2, m = 2, k = 3, dim = 2;
  double radius = 0.4, r = 2.0, atom = 1.0, density = 1.0;
  std::optional<double> length;
  bool allow_disconnected = false;
};

sdl::Topology parse_topology(const std::string& name) {
  if (name == "path") return sdl::Topology::path;
  if (name == "grid") return sdl::Topology::grid;
  if (name == "tree") return sdl::Topology::tree;
  if (name == "star") return sdl::Topology::star;
  if (name == "random-geometric") return sdl::Topology::random_geometric;
  throw UsageError("unknown topology '" + name + "'");
}

int run_gen(const GenArgs& a) {
  sdl::GeneratorSpec spec;
  spec.topology = parse_topology(a.topology);
  spec.n = a.n;
  spec.m = a.m;
  spec.k = a.k;
  spec.radius = a.radius;
  spec.seed = a.common.seed;
  spec.atom = a.atom;
  spec.density = a.density;
  spec.length = a.length;
  spec.require_connected = !a.allow_disconnected;
  try {
    spec.norm = sdl::Norm::lr(a.dim, a.r);
    emit(a.common, dump(sdl::io::instance_to_json(sdl::build_instance(spec))));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return exit_pass;
}

// ---------------------------------------------------------------------------
// beckmann

struct BeckmannArgs {
  Common common;
  std::string instance, field;
  double q = 0.0, p = 0.0;
};

double resolve_q(double q, double p) {
  if (q > 0.0 && p > 0.0 && std::abs(1.0 / p + 1.0 / q - 1.0) > 1e-12)
    throw UsageError("--p and --q are not conjugate");
  if (q > 0.0) return q;
  if (p > 0.0) return sdl::conjugate_exponent(p);
  return 2.0;
}

int run_beckmann(const BeckmannArgs& a) {
  const double q = resolve_q(a.q, a.p);
  try {
    sdl::require_energy_exponent(q, "q");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto loaded = sdl::io::instance_from_json(sdl::io::read_json_file(a.instance));
  const auto& inst = loaded.numeric;
  sdl::ScalarField<double> g(
      doubles(sdl::io::values_from_json(sdl::io::read_json_file(a.field), "values", inst.num_vertices())));
  try {
    const auto sol = sdl::solve_beckmann(inst, g, q, a.common.tol);
    emit(a.common, dump(sdl::io::solution_to_json(sol)));
    return exit_pass;
  } catch (const sdl::ConvergenceError& e) {
    auto j = sdl::io::solution_to_json(e.best());
    j["error"] = e.what();
    emit(a.common, dump(j));
    std::cerr << "sdl beckmann: " << e.what() << "\n";
    return exit_fail;
  }
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeArgs {
  Common common;
  std::string instance, flow, dual;
  double q = 2.0;
};

template <class S>
S from_rational(const sdl::Rational& x) {
  if constexpr (sdl::is_exact_v<S>)
    return x;
  else
    return sdl::to_double(x);
}

template <class S>
json decompose_with(const sdl::Instance<S>& inst, const std::vector<sdl::Rational>& raw, bool dual, double q) {
  std::vector<S> values;
  for (const auto& x : raw) values.push_back(from_rational<S>(x));
  json out;
  if (dual) {
    const auto dp = sdl::plan_from_dual(inst, sdl::EdgeField<S>(values), q);
    out = sdl::io::plan_to_json(dp.plan);
    out["cycle_part"] = sdl::io::write_numbers(dp.split.cycles.J);
    out["cycle_cancellations"] = dp.split.cancellations;
    out["boundary"] = sdl::io::write_numbers(dp.stats.boundary);
    out["mass"] = sdl::io::write_number(dp.stats.mass);
    out["bar_norm"] = dp.bar_norm;
    out["L_norm"] = dp.L_norm;
    out["in_Bq"] = dp.stats.in_Bq;
  } else {
    const sdl::Current1<S> T(values);
    const auto split = sdl::remove_cycles(inst, T);
    const auto plan = sdl::decompose_acyclic(inst, split.acyclic);
    const auto stats = sdl::plan_stats(inst, plan);
    out = sdl::io::plan_to_json(plan);
    out["cycle_part"] = sdl::io::write_numbers(split.cycles.J);
    out["cycle_cancellations"] = split.cancellations;
    out["boundary"] = sdl::io::write_numbers(stats.boundary);
    out["mass"] = sdl::io::write_number(stats.mass);
    out["in_Bq"] = stats.in_Bq;
  }
  out["exact"] = sdl::is_exact_v<S>;
  return out;
}

int run_decompose(const DecomposeArgs& a) {
  if (a.flow.empty() == a.dual.empty()) throw UsageError("give exactly one of --flow and --dual");
  try {
    sdl::require_energy_exponent(a.q, "q");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto loaded = sdl::io::instance_from_json(sdl::io::read_json_file(a.instance));
  const bool dual = !a.dual.empty();
  bool rational = loaded.rational;
  const auto raw = sdl::io::values_from_json(sdl::io::read_json_file(dual ? a.dual : a.flow), dual ? "L" : "J",
                                             loaded.exact.num_edges(), &rational);
  const json out = rational ? decompose_with(loaded.exact, raw, dual, a.q)
                            : decompose_with(loaded.numeric, raw, dual, a.q);
  emit(a.common, dump(out));
  return exit_pass;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  Common common;
  std::string instance, field;
  std::size_t random_fields = 0;
  double p = 2.0;
  std::vector<std::size_t> levels{3, 4, 8, 16, 32};
};

std::size_t worker_count(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SDL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) cap = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("SDL_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

/// Field i of a random batch: uniform in [-1, 1] per vertex, its own stream.
sdl::ScalarField<double> random_field(std::size_t n, std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(index)};
  sdl::Rng rng(seq);
  sdl::ScalarField<double> f(n, 0.0);
  for (auto& x : f.values) x = sdl::uniform(rng, -1.0, 1.0);
  return f;
}

int run_verify(const VerifyArgs& a) {
  if (a.field.empty() == (a.random_fields == 0)) throw UsageError("give exactly one of --field and --random-fields");
  try {
    sdl::require_energy_exponent(a.p);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.levels.empty()) throw UsageError("--levels must not be empty");
  for (std::size_t i = 0; i < a.levels.size(); ++i)
    if (a.levels[i] < 1 || (i > 0 && a.levels[i] <= a.levels[i - 1]))
      throw UsageError("--levels must be positive and strictly increasing");

  const auto loaded = sdl::io::instance_from_json(sdl::io::read_json_file(a.instance));
  const auto& inst = loaded.numeric;
  std::vector<sdl::ScalarField<double>> fields;
  if (!a.field.empty()) {
    fields.emplace_back(
        doubles(sdl::io::values_from_json(sdl::io::read_json_file(a.field), "values", inst.num_vertices())));
  } else {
    for (std::size_t i = 0; i < a.random_fields; ++i)
      fields.push_back(random_field(inst.num_vertices(), a.common.seed, i));
  }

  sdl::ReportConfig cfg;
  cfg.levels = a.levels;
  cfg.rel_tol = a.common.tol;
  const std::string label = label_of(a.instance);
  std::vector<json> records(fields.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < fields.size(); i = next++) {
      try {
        records[i] = sdl::io::report_to_json(sdl::equivalence_report(inst, fields[i], a.p, cfg), label, i);
      } catch (const sdl::ConvergenceError& e) {
        records[i] = sdl::io::failed_report_json(label, i, a.p, "beckmann_converged", e.what());
      } catch (const std::exception& e) {
        records[i] = sdl::io::failed_report_json(label, i, a.p, "pipeline_error", e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = worker_count(fields.size());
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool all_passed = true;
  for (const auto& r : records) {
    if (r.at("passed").get<bool>()) continue;
    all_passed = false;
    std::string names;
    for (const auto& f : r.at("failed")) names += (names.empty() ? "" : ", ") + f.get<std::string>();
    std::cerr << "sdl verify: field " << r.at("field_index").get<std::size_t>() << " failed: " << names << "\n";
  }
  if (a.common.format == "csv") {
    std::string text = sdl::io::report_csv_header();
    for (const auto& r : records) text += sdl::io::report_csv_row(r, label);
    emit(a.common, text);
  } else {
    emit(a.common, dump(records.size() == 1 ? records.front() : json(records)));
  }
  return all_passed ? exit_pass : exit_fail;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  Common common;
  std::string dir;
};

int run_report(const ReportArgs& a) {
  if (!fs::is_directory(a.dir)) throw sdl::io::IoError("not a directory: '" + a.dir + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "sdl report: no run files in '" << a.dir << "'\n";
    return exit_fail;
  }
  std::vector<std::pair<std::string, json>> runs;
  for (const auto& path : files) {
    const json j = sdl::io::read_json_file(path.string());
    const std::string run = path.filename().string();
    auto take = [&](const json& r) {
      if (!sdl::io::is_report_record(r)) throw sdl::io::FormatError("mixed schema: '" + path.string() + "' is not a report");
      runs.emplace_back(run, r);
    };
    if (j.is_array()) {
      if (j.empty()) throw sdl::io::FormatError("mixed schema: '" + path.string() + "' is an empty array");
      for (const auto& r : j) take(r);
    } else {
      take(j);
    }
  }
  if (a.common.format == "csv") {
    std::string text = sdl::io::report_csv_header();
    for (const auto& [run, r] : runs) text += sdl::io::report_csv_row(r, run);
    emit(a.common, text);
  } else {
    json out = json::array();
    for (const auto& [run, r] : runs) {
      json rec = r;
      rec["run"] = run;
      out.push_back(std::move(rec));
    }
    emit(a.common, dump(out));
  }
  return exit_pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev duality toolkit on weighted metric graphs"};
  app.require_subcommand(1);
  app.allow_extras(false);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate an instance file");
  add_common(gen_cmd, gen.common, {"json"});
  gen_cmd->add_option("--topology", gen.topology, "path | grid | tree | star | random-geometric");
  gen_cmd->add_option("--n", gen.n, "vertex count (rows for grid)");
  gen_cmd->add_option("--m", gen.m, "grid columns");
  gen_cmd->add_option("--k", gen.k, "star leaves");
  gen_cmd->add_option("--radius", gen.radius, "random-geometric radius");
  gen_cmd->add_option("--dim", gen.dim, "embedding dimension");
  gen_cmd->add_option("--r", gen.r, "norm exponent (lr family)");
  gen_cmd->add_option("--atom", gen.atom, "atom mass at every vertex");
  gen_cmd->add_option("--density", gen.density, "linear density of every edge");
  gen_cmd->add_option("--length", gen.length, "override every edge length");
  gen_cmd->add_flag("--allow-disconnected", gen.allow_disconnected, "accept disconnected random graphs");

  BeckmannArgs bk;
  auto* bk_cmd = app.add_subcommand("beckmann", "solve the Beckmann problem for a divergence field");
  add_common(bk_cmd, bk.common, {"json"});
  bk_cmd->add_option("--instance", bk.instance, "instance file")->required();
  bk_cmd->add_option("--field", bk.field, "divergence file {\"values\": [...]}")->required();
  bk_cmd->add_option("--q", bk.q, "flow exponent (default 2)");
  bk_cmd->add_option("--p", bk.p, "energy exponent; q = p/(p-1)");

  DecomposeArgs dc;
  auto* dc_cmd = app.add_subcommand("decompose", "split a flow into cycles and weighted paths");
  add_common(dc_cmd, dc.common, {"json"});
  dc_cmd->add_option("--instance", dc.instance, "instance file")->required();
  dc_cmd->add_option("--flow", dc.flow, "current file {\"J\": [...]}");
  dc_cmd->add_option("--dual", dc.dual, "dual element file {\"L\": [...]}");
  dc_cmd->add_option("--q", dc.q, "exponent for the barycenter norm");

  VerifyArgs vf;
  auto* vf_cmd = app.add_subcommand("verify", "run the equivalence report");
  add_common(vf_cmd, vf.common, {"json", "csv"});
  vf_cmd->add_option("--instance", vf.instance, "instance file")->required();
  vf_cmd->add_option("--field", vf.field, "field file {\"values\": [...]}");
  vf_cmd->add_option("--random-fields", vf.random_fields, "number of random fields");
  vf_cmd->add_option("--p", vf.p, "energy exponent in (1, inf)");
  vf_cmd->add_option("--levels", vf.levels, "subdivision levels")->delimiter(',');

  ReportArgs rp;
  auto* rp_cmd = app.add_subcommand("report", "aggregate a directory of reports");
  add_common(rp_cmd, rp.common, {"csv", "json"});
  rp.common.format = "csv";
  rp_cmd->add_option("dir,--dir", rp.dir, "directory of run files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*bk_cmd) return run_beckmann(bk);
    if (*dc_cmd) return run_decompose(dc);
    if (*vf_cmd) return run_verify(vf);
    if (*rp_cmd) return run_report(rp);
  } catch (const UsageError& e) {
    std::cerr << "sdl: " << e.what() << "\n";
    return exit_usage;
  } catch (const sdl::InfeasibleError& e) {
    std::cerr << "sdl: " << e.what() << "\n";
    return exit_usage;
  } catch (const sdl::io::FormatError& e) {
    std::cerr << "sdl: " << e.what() << "\n";
    return exit_usage;
  } catch (const sdl::io::IoError& e) {
    std::cerr << "sdl: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "sdl: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "sdl: " << e.what() << "\n";
    return exit_fail;
  }
  return exit_usage;
}
