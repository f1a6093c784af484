#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <drc/registry.hpp>
#include <drc/scheduler.hpp>
#include <drc/stats.hpp>

namespace drc {

/// One benchmark experiment: a problem, an algorithm, and a seed range.
/// Dimensions of 0 fall back to the problem family's default; zeroed
/// config budgets resolve from the per-size termination table.
struct ExperimentSpec {
  std::string problem;
  int dim_u = 0;
  int dim_l = 0;
  std::string algo = "drc";
  int runs = 1;
  std::uint64_t seed0 = 1;
  RunConfig config;
  std::string results_path;
  std::string summary_path;
  std::string trace_path;
};

/// One row of the results table.
struct RunRecord {
  std::uint64_t seed = 0;
  double acc_u = 0.0;
  double acc_l = 0.0;
  long long fes_u = 0;
  long long fes_l = 0;
  long long fes_total = 0;
  double wall_s = 0.0;
  long long upper_gens = 0;
};

/// All in-memory outputs of one experiment; the trace belongs to run 0.
struct BenchmarkResult {
  std::vector<RunRecord> records;
  std::vector<TraceEvent> run0_trace;
  int resolved_m = 0;
  int resolved_n = 0;
};

namespace detail {

/// Round-trips a double through the CSV number format so that statistics
/// recomputed from the written file agree with the summary exactly.
inline double csv_round(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::strtod(buf, nullptr);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

/// Runs the experiment and returns every record plus run 0's trace.
inline BenchmarkResult run_experiment(const ExperimentSpec& spec) {
  if (spec.runs < 1)
    throw std::invalid_argument("bench: runs must be at least 1");
  if (spec.algo != "drc" && spec.algo != "nested")
    throw std::invalid_argument("bench: unknown algorithm '" + spec.algo + "'");
  const std::optional<int> m =
      spec.dim_u > 0 ? std::optional<int>(spec.dim_u) : std::nullopt;
  const std::optional<int> n =
      spec.dim_l > 0 ? std::optional<int>(spec.dim_l) : std::nullopt;
  const BilevelProblem prob = make_problem(spec.problem, m, n);

  BenchmarkResult out;
  out.resolved_m = prob.dim_u;
  out.resolved_n = prob.dim_l;
  out.records.reserve(static_cast<std::size_t>(spec.runs));
  for (int r = 0; r < spec.runs; ++r) {
    RunConfig cfg = spec.config;
    cfg.seed = spec.seed0 + static_cast<std::uint64_t>(r);
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res =
        spec.algo == "drc" ? solve(prob, cfg) : nested_solve(prob, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.seed = cfg.seed;
    rec.acc_u = res.acc_u;
    rec.acc_l = res.acc_l;
    rec.fes_u = res.fes_u;
    rec.fes_l = res.fes_l;
    rec.fes_total = res.fes_u + res.fes_l;
    rec.wall_s = std::chrono::duration<double>(t1 - t0).count();
    rec.upper_gens = res.upper_generations;
    out.records.push_back(rec);
    if (r == 0) out.run0_trace = std::move(res.trace);
  }
  return out;
}

/// Results table as CSV text. Wall time is the only non-deterministic
/// column; everything else is byte-stable for a fixed spec.
inline std::string results_csv(const std::vector<RunRecord>& records) {
  std::string text = "seed,acc_u,acc_l,fes_u,fes_l,fes_total,wall_s,upper_gens\n";
  for (const RunRecord& r : records) {
    text += std::to_string(r.seed);
    text += ',';
    text += detail::format_double(r.acc_u);
    text += ',';
    text += detail::format_double(r.acc_l);
    text += ',';
    text += std::to_string(r.fes_u);
    text += ',';
    text += std::to_string(r.fes_l);
    text += ',';
    text += std::to_string(r.fes_total);
    text += ',';
    text += detail::format_double(r.wall_s);
    text += ',';
    text += std::to_string(r.upper_gens);
    text += '\n';
  }
  return text;
}

/// Resource-allocation trace as CSV text; one row per lower-level
/// execution (activation rows carry round 0).
inline std::string trace_csv(const std::vector<TraceEvent>& trace) {
  std::string text =
      "upper_gen,round,slot,task_id,execs,fes_l,improved,cooperated,terminated\n";
  for (const TraceEvent& ev : trace) {
    text += std::to_string(ev.upper_gen);
    text += ',';
    text += std::to_string(ev.round);
    text += ',';
    text += std::to_string(ev.slot);
    text += ',';
    text += std::to_string(ev.task_id);
    text += ',';
    text += std::to_string(ev.execs);
    text += ',';
    text += std::to_string(ev.fes_l);
    text += ',';
    text += ev.improved ? '1' : '0';
    text += ',';
    text += ev.cooperated ? '1' : '0';
    text += ',';
    text += ev.terminated ? '1' : '0';
    text += '\n';
  }
  return text;
}

namespace detail {

inline nlohmann::json metric_entry(std::vector<double> values) {
  for (double& v : values) v = csv_round(v);
  const auto [med, iqr] = aggregate(values);
  return nlohmann::json{{"median", med}, {"iqr", iqr}};
}

}  // namespace detail

/// Summary of an experiment: per-metric median and IQR plus the run 0
/// execution count that cross-checks the trace file.
inline nlohmann::json summary_json(const ExperimentSpec& spec,
                                   const BenchmarkResult& result) {
  std::vector<double> acc_u, acc_l, fes_u, fes_l, fes_total, wall_s, gens;
  for (const RunRecord& r : result.records) {
    acc_u.push_back(r.acc_u);
    acc_l.push_back(r.acc_l);
    fes_u.push_back(static_cast<double>(r.fes_u));
    fes_l.push_back(static_cast<double>(r.fes_l));
    fes_total.push_back(static_cast<double>(r.fes_total));
    wall_s.push_back(r.wall_s);
    gens.push_back(static_cast<double>(r.upper_gens));
  }
  nlohmann::json j;
  j["problem"] = spec.problem;
  j["dims"] = {result.resolved_m, result.resolved_n};
  j["algo"] = spec.algo;
  j["runs"] = spec.runs;
  j["seed0"] = spec.seed0;
  j["quantile_method"] = "linear-type7";
  j["significance_test"] = "unpaired-rank-sum";
  j["metrics"] = {
      {"acc_u", detail::metric_entry(acc_u)},
      {"acc_l", detail::metric_entry(acc_l)},
      {"fes_u", detail::metric_entry(fes_u)},
      {"fes_l", detail::metric_entry(fes_l)},
      {"fes_total", detail::metric_entry(fes_total)},
      {"wall_s", detail::metric_entry(wall_s)},
      {"upper_gens", detail::metric_entry(gens)},
  };
  j["run0"] = {{"seed", result.records.front().seed},
               {"executions", result.run0_trace.size()}};
  return j;
}

/// Flat JSON config overrides applied on top of a base config. Unknown
/// keys are rejected so typos fail loudly.
inline RunConfig apply_config_json(const nlohmann::json& j, RunConfig cfg) {
  if (!j.is_object())
    throw std::invalid_argument("config: overrides must be a JSON object");
  const auto num = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number())
      throw std::invalid_argument("config: key '" + key + "' must be a number");
    return v.get<double>();
  };
  const auto integer = [&num](const nlohmann::json& v, const std::string& key) {
    const double d = num(v, key);
    const long long i = static_cast<long long>(d);
    if (static_cast<double>(i) != d)
      throw std::invalid_argument("config: key '" + key + "' must be an integer");
    return i;
  };
  const auto boolean = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_boolean())
      throw std::invalid_argument("config: key '" + key + "' must be a boolean");
    return v.get<bool>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "pop_u") cfg.pop_u = static_cast<int>(integer(value, key));
    else if (key == "pop_l") cfg.pop_l = static_cast<int>(integer(value, key));
    else if (key == "fes_u_max") cfg.fes_u_max = integer(value, key);
    else if (key == "fes_u_var") cfg.fes_u_var = integer(value, key);
    else if (key == "fes_l_max") cfg.fes_l_max = integer(value, key);
    else if (key == "fes_l_var") cfg.fes_l_var = integer(value, key);
    else if (key == "tol_u") cfg.tol_u = num(value, key);
    else if (key == "tol_l") cfg.tol_l = num(value, key);
    else if (key == "acc_stop") cfg.acc_stop = num(value, key);
    else if (key == "gamma") cfg.spu.gamma = num(value, key);
    else if (key == "epsilon") cfg.spu.epsilon = num(value, key);
    else if (key == "w_bs") cfg.spu.w_bs = num(value, key);
    else if (key == "w_pf") cfg.spu.w_pf = num(value, key);
    else if (key == "w_pt") cfg.spu.w_pt = num(value, key);
    else if (key == "alpha") cfg.cic.alpha = num(value, key);
    else if (key == "cic_normalize") cfg.cic.normalize_weights = boolean(value, key);
    else if (key == "cic_min_execs")
      cfg.cic.min_execs = static_cast<int>(integer(value, key));
    else if (key == "strict_rounds") cfg.strict_rounds = boolean(value, key);
    else
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return cfg;
}

inline RunConfig parse_config_overrides(const std::string& text, RunConfig cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return apply_config_json(j, cfg);
}

inline RunConfig load_config_file(const std::string& path, RunConfig cfg) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_overrides(text, cfg);
}

namespace detail {

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("bench: cannot open '" + path + "' for writing");
  out << text;
  if (!out)
    throw std::runtime_error("bench: failed writing '" + path + "'");
}

}  // namespace detail

/// Runs the experiment and writes whichever output files the spec names.
/// Files are written after all runs complete, in seed order.
inline BenchmarkResult run_benchmark(const ExperimentSpec& spec) {
  BenchmarkResult result = run_experiment(spec);
  if (!spec.results_path.empty())
    detail::write_file(spec.results_path, results_csv(result.records));
  if (!spec.trace_path.empty())
    detail::write_file(spec.trace_path, trace_csv(result.run0_trace));
  if (!spec.summary_path.empty())
    detail::write_file(spec.summary_path, summary_json(spec, result).dump(2) + "\n");
  return result;
}

}  // namespace drc
