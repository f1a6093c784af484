#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <drc/cic.hpp>
#include <drc/es.hpp>
#include <drc/problem.hpp>
#include <drc/rng.hpp>
#include <drc/spu.hpp>
#include <drc/stats.hpp>

namespace drc {

/// Per-run settings. Zero population sizes and budgets are resolved from the
/// problem dimensions: populations via 4 + floor(ln(dims)), budgets via the
/// per-scale termination table.
struct RunConfig {
  int pop_u = 0;
  int pop_l = 0;
  long long fes_u_max = 0;
  long long fes_u_var = 0;
  long long fes_l_max = 0;
  long long fes_l_var = 0;
  double tol_u = 1e-6;
  double tol_l = 1e-5;
  double acc_stop = 1e-6;
  SpuConfig spu;
  CicConfig cic;
  std::uint64_t seed = 1;
  bool strict_rounds = false;
};

inline RunConfig resolve_config(RunConfig cfg, const BilevelProblem& prob) {
  const int m = prob.dim_u;
  const int n = prob.dim_l;
  if (cfg.pop_u <= 0)
    cfg.pop_u = 4 + static_cast<int>(std::floor(std::log(double(m + n))));
  if (cfg.pop_l <= 0)
    cfg.pop_l = 4 + static_cast<int>(std::floor(std::log(double(n))));
  long long bu, buv, bl, blv;
  if (m + n <= 10) {
    bu = 2500; buv = 350; bl = 250; blv = 25;
  } else if (m + n <= 20) {
    bu = 5000; buv = 750; bl = 500; blv = 50;
  } else {
    bu = 12500; buv = 750; bl = 1000; blv = 50;
  }
  if (cfg.fes_u_max <= 0) cfg.fes_u_max = bu;
  if (cfg.fes_u_var <= 0) cfg.fes_u_var = buv;
  if (cfg.fes_l_max <= 0) cfg.fes_l_max = bl;
  if (cfg.fes_l_var <= 0) cfg.fes_l_var = blv;
  if (cfg.pop_u < 2 || cfg.pop_l < 2)
    throw std::invalid_argument("config: populations must have at least 2");
  if (!(cfg.tol_u > 0.0) || !(cfg.tol_l > 0.0) || !(cfg.acc_stop > 0.0))
    throw std::invalid_argument("config: tolerances must be positive");
  validate_spu_config(cfg.spu);
  validate_cic_config(cfg.cic);
  return cfg;
}

/// A jointly evaluated upper/lower solution pair.
struct BestPair {
  Eigen::VectorXd x_u;
  Eigen::VectorXd x_l;
  UpperEval up;
  LowerEval lo;
};

/// One competing lower-level optimization task bound to a frozen upper
/// vector.
struct LowerTask {
  int task_id = 0;
  Eigen::VectorXd x_u;
  EsState es;
  RngStream stream = RngStream(0);
  int exec_count = 0;
  long long fes_l_used = 0;
  BestPair best;
  std::vector<double> elite_window;
  bool terminated = false;
  TaskHistory history;
};

/// Append-only record of every execution's resulting pair and its frozen
/// internal fitness, plus the feasibility ceiling used to score infeasible
/// pairs.
struct Archive {
  struct Entry {
    int exec_index = 0;
    BestPair pair;
    double fitness = 0.0;
  };

  std::map<int, std::vector<Entry>> per_task;
  bool has_feasible = false;
  double worst_feasible_f = 0.0;
  bool has_any = false;
  double max_f_any = 0.0;

  double append(int task_id, int exec_index, const BestPair& pair) {
    max_f_any = has_any ? std::max(max_f_any, pair.up.value) : pair.up.value;
    has_any = true;
    if (pair.up.cv == 0.0) {
      worst_feasible_f =
          has_feasible ? std::max(worst_feasible_f, pair.up.value) : pair.up.value;
      has_feasible = true;
    }
    double fitness;
    if (pair.up.cv == 0.0) {
      fitness = -pair.up.value;
    } else {
      const double ceiling = has_feasible ? worst_feasible_f : max_f_any;
      fitness = -(ceiling + pair.up.cv);
    }
    per_task[task_id].push_back({exec_index, pair, fitness});
    return fitness;
  }

  /// Envelope of the latest fitness of every archived task.
  GlobalEnvelope envelope() const {
    GlobalEnvelope env;
    bool first = true;
    for (const auto& [id, entries] : per_task) {
      const double f = entries.back().fitness;
      if (first) {
        env.fit_gb = env.fit_gw = f;
        first = false;
      } else {
        env.fit_gb = std::max(env.fit_gb, f);
        env.fit_gw = std::min(env.fit_gw, f);
      }
    }
    if (first) throw std::logic_error("archive: envelope of an empty archive");
    return env;
  }
};

/// One scheduler decision, serialized to the resource-allocation trace.
struct TraceEvent {
  long long upper_gen = 0;
  int round = 0;  // 0 marks the activation pass
  int slot = 0;   // 1-based position within the round
  int task_id = 0;
  int execs = 0;
  long long fes_l = 0;
  bool improved = false;
  bool cooperated = false;
  bool terminated = false;
};

/// Tracks the run incumbent and evaluates every upper-level stop rule:
/// budget, elitist-value stagnation, and target accuracy.
///
/// Pairs evaluated mid-competition carry immature lower-level solutions, and
/// on problems where the upper objective rewards lower-level error those
/// pairs undercut every genuine optimum, so a best-ever record is useless as
/// the run's answer. The reported incumbent is instead the Deb-best pair
/// frozen at lower-task termination within the latest generation that
/// produced one: late generations inherit a collapsed upper-level marginal,
/// so their terminated pairs are the mature ones. The Deb-best over all
/// upper evaluations is kept only as a fallback for runs whose budget
/// expires before any task terminates.
struct StopMonitor {
  const BilevelProblem* prob = nullptr;
  const RunConfig* cfg = nullptr;
  const EvalCounter* counter = nullptr;
  bool has_any = false;
  BestPair best_any;
  bool has_recent = false;
  bool gen_fresh = true;
  BestPair recent_best;
  std::vector<double> elite_values;
  bool stop = false;

  bool has_incumbent() const { return has_recent || has_any; }

  const BestPair& incumbent() const {
    if (!has_incumbent())
      throw std::logic_error("monitor: no upper evaluation was recorded");
    return has_recent ? recent_best : best_any;
  }

  /// Registers one upper FE; the stagnation window advances per upper FE.
  /// Each evaluated pair is the elite of its own task at that moment, so the
  /// window holds the raw evaluated values and flattens only when every
  /// recently touched task agrees to within tol_u.
  void note_upper_eval(const BestPair& pair) {
    if (!has_any || deb_compare(pair.up, best_any.up) < 0) {
      best_any = pair;
      has_any = true;
    }
    elite_values.push_back(pair.up.value);
    if (counter->fes_u >= cfg->fes_u_max) stop = true;
    const std::size_t w = static_cast<std::size_t>(cfg->fes_u_var) + 1;
    if (elite_values.size() >= w) {
      const auto from = elite_values.end() - static_cast<std::ptrdiff_t>(w);
      const auto [lo, hi] = std::minmax_element(from, elite_values.end());
      if (*hi - *lo < cfg->tol_u) stop = true;
    }
    check_accuracy();
  }

  /// Registers a pair frozen at its task's lower-level termination. Consumes
  /// no upper FE of its own; the evaluation was already noted. The first
  /// such pair of a generation displaces the previous generation's pool.
  void note_terminated(const BestPair& pair) {
    if (gen_fresh || deb_compare(pair.up, recent_best.up) < 0)
      recent_best = pair;
    gen_fresh = false;
    has_recent = true;
    check_accuracy();
  }

  /// Marks the upper-generation boundary for the termination pool.
  void commit_generation() { gen_fresh = true; }

 private:
  void check_accuracy() {
    const BestPair& inc = incumbent();
    if (inc.up.cv == 0.0 &&
        std::abs(inc.up.value - prob->f_star) < cfg->acc_stop)
      stop = true;
  }
};

namespace detail {

inline Box joint_box(const BilevelProblem& prob) {
  Box box;
  box.lb.resize(prob.dim_u + prob.dim_l);
  box.ub.resize(prob.dim_u + prob.dim_l);
  box.lb << prob.bounds_u.lb, prob.bounds_l.lb;
  box.ub << prob.bounds_u.ub, prob.bounds_l.ub;
  return box;
}

/// Index of the Deb-best lower evaluation, first index winning ties.
inline std::size_t deb_best_index(const std::vector<LowerEval>& evals,
                                  std::size_t limit) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < limit; ++i)
    if (deb_compare(evals[i], evals[best]) < 0) best = i;
  return best;
}

/// Candidates sorted best-first under the constrained preference rule.
inline std::vector<Candidate> deb_ranked(const std::vector<Eigen::VectorXd>& xs,
                                         const std::vector<LowerEval>& evals) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return deb_compare(evals[a], evals[b]) < 0;
                   });
  std::vector<Candidate> ranked;
  ranked.reserve(xs.size());
  for (std::size_t i : order)
    ranked.push_back({xs[i], evals[i].value, evals[i].cv});
  return ranked;
}

inline void check_lower_termination(LowerTask& task, const RunConfig& cfg) {
  if (task.fes_l_used >= cfg.fes_l_max) {
    task.terminated = true;
    return;
  }
  const long long q = cfg.pop_l;
  const std::size_t w =
      static_cast<std::size_t>((cfg.fes_l_var + q - 1) / q) + 1;
  if (task.elite_window.size() >= w) {
    const auto from = task.elite_window.end() - static_cast<std::ptrdiff_t>(w);
    const auto [lo, hi] = std::minmax_element(from, task.elite_window.end());
    if (*hi - *lo < cfg.tol_l) task.terminated = true;
  }
}

inline void record_execution(LowerTask& task, Archive& archive,
                             const RunConfig& cfg) {
  // Envelope snapshot predates this execution's append; no potential is
  // scored for a task's first execution.
  std::optional<GlobalEnvelope> env;
  if (!task.history.fit_series.empty()) env = archive.envelope();
  task.exec_count += 1;
  const double fit = archive.append(task.task_id, task.exec_count, task.best);
  if (env) {
    const double fit_prev = task.history.fit_series.back();
    task.history.pt_series.push_back(
        evolving_potential(fit, fit_prev, *env, cfg.spu.denom_guard));
  }
  task.history.fit_series.push_back(fit);
  task.history.exec_count = task.exec_count;
  task.elite_window.push_back(task.best.lo.value);
  check_lower_termination(task, cfg);
}

inline TaskSnapshot snapshot(const LowerTask& t) {
  TaskSnapshot s;
  s.task_id = t.task_id;
  s.x_u = t.x_u;
  s.exec_count = t.exec_count;
  s.mean_history = t.es.mean_history;
  s.best_x_l = t.best.x_l;
  s.terminated = t.terminated;
  return s;
}

}  // namespace detail

/// Spawns one lower-level task per upper individual: the lower search starts
/// from the individual's lower block under the marginal lower-block Gaussian
/// of the upper search state, runs one generation, and the resulting best
/// pair is evaluated once at the upper level and archived.
inline std::pair<std::vector<LowerTask>, Archive> activate(
    const std::vector<Eigen::VectorXd>& pop_u, const EsState& upper_es,
    const BilevelProblem& prob, const RunConfig& cfg, EvalCounter& counter,
    long long upper_gen, std::vector<TraceEvent>& trace,
    StopMonitor* monitor = nullptr) {
  const int p = static_cast<int>(pop_u.size());
  if (p < 2)
    throw std::invalid_argument("drc: activation needs at least 2 individuals");
  if (cfg.pop_l < 2)
    throw std::invalid_argument("drc: config must be resolved first");
  const int m = prob.dim_u;
  const int n = prob.dim_l;
  const int q = cfg.pop_l;

  std::vector<int> lower_coords(static_cast<std::size_t>(n));
  std::iota(lower_coords.begin(), lower_coords.end(), m);
  Eigen::VectorXd marg_mean;
  Eigen::MatrixXd marg_cov;
  double marg_sigma = 0.0;
  marginal(upper_es, lower_coords, marg_mean, marg_cov, marg_sigma);

  Archive archive;
  std::vector<LowerTask> tasks;
  tasks.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    if (pop_u[static_cast<std::size_t>(i)].size() != m + n)
      throw std::invalid_argument("drc: individual has wrong joint dimension");
    LowerTask t;
    t.task_id = i + 1;
    t.x_u = pop_u[static_cast<std::size_t>(i)].head(m);
    t.es = init_es(n, pop_u[static_cast<std::size_t>(i)].tail(n), marg_sigma,
                   marg_cov, q);
    t.stream = RngStream(
        derive_seed(cfg.seed, kStreamTask,
                    static_cast<std::uint64_t>(upper_gen),
                    static_cast<std::uint64_t>(t.task_id)));

    std::vector<Eigen::VectorXd> xs =
        sample_in_box(t.es, q, prob.bounds_l, t.stream);
    std::vector<LowerEval> evals;
    evals.reserve(xs.size());
    for (const Eigen::VectorXd& x : xs)
      evals.push_back(evaluate_lower(prob, t.x_u, x, counter));
    t.fes_l_used = q;
    update(t.es, detail::deb_ranked(xs, evals));

    const std::size_t b = detail::deb_best_index(evals, evals.size());
    const UpperEval up = evaluate_upper(prob, t.x_u, xs[b], counter);
    t.best = {t.x_u, xs[b], up, evals[b]};
    t.history.task_id = t.task_id;
    if (monitor) monitor->note_upper_eval(t.best);
    detail::record_execution(t, archive, cfg);
    if (monitor && t.terminated) monitor->note_terminated(t.best);

    trace.push_back({upper_gen, 0, i + 1, t.task_id, t.exec_count,
                     t.fes_l_used, true, false, t.terminated});
    tasks.push_back(std::move(t));
  }
  return {std::move(tasks), std::move(archive)};
}

/// Draws one task id from the selection distribution.
inline int roulette_select(const ProbabilityVector& probs, RngStream& rng) {
  if (probs.empty())
    throw std::invalid_argument("drc: roulette over an empty distribution");
  const double u = rng.unit();
  double acc = 0.0;
  int last = probs.begin()->first;
  for (const auto& [id, prob] : probs) {
    acc += prob;
    last = id;
    if (u < acc) return id;
  }
  return last;
}

/// Runs one execution of the selected task: optional cooperative mixing, one
/// lower generation (always q lower FEs), a conditional upper FE when the
/// task's best lower solution improved, archive append, and termination
/// checks. Round and slot of the returned event are filled by the caller.
inline TraceEvent execute_task(LowerTask& task,
                               const std::optional<CooperationPlan>& plan,
                               const std::vector<LowerTask>& peers,
                               const BilevelProblem& prob,
                               const RunConfig& cfg, EvalCounter& counter,
                               Archive& archive,
                               StopMonitor* monitor = nullptr) {
  if (task.terminated)
    throw std::logic_error("drc: executing a terminated task");
  if (cfg.pop_l < 2)
    throw std::invalid_argument("drc: config must be resolved first");
  const int q = cfg.pop_l;

  std::vector<Eigen::VectorXd> xs;
  if (plan) {
    std::vector<EsState> sources;
    sources.reserve(plan->sources.size());
    for (const auto& [id, w] : plan->sources) {
      const auto it =
          std::find_if(peers.begin(), peers.end(),
                       [id](const LowerTask& t) { return t.task_id == id; });
      if (it == peers.end())
        throw std::logic_error("drc: cooperation source is not a known task");
      sources.push_back(it->es);
    }
    task.es = apply_cooperation(task.es, sources, *plan);
    xs = sample_in_box(task.es, q - 1, prob.bounds_l, task.stream);
    xs.push_back(plan->navi);
  } else {
    xs = sample_in_box(task.es, q, prob.bounds_l, task.stream);
  }

  std::vector<LowerEval> evals;
  evals.reserve(xs.size());
  for (const Eigen::VectorXd& x : xs)
    evals.push_back(evaluate_lower(prob, task.x_u, x, counter));
  task.fes_l_used += q;
  update(task.es, detail::deb_ranked(xs, evals));

  // The navigational solution joins the search update above but is barred
  // from becoming the task's incumbent.
  const std::size_t own = plan ? xs.size() - 1 : xs.size();
  const std::size_t b = detail::deb_best_index(evals, own);
  const bool improved = deb_compare(evals[b], task.best.lo) < 0;
  if (improved) {
    const UpperEval up = evaluate_upper(prob, task.x_u, xs[b], counter);
    task.best = {task.x_u, xs[b], up, evals[b]};
    if (monitor) monitor->note_upper_eval(task.best);
  }
  detail::record_execution(task, archive, cfg);
  if (monitor && task.terminated) monitor->note_terminated(task.best);

  TraceEvent ev;
  ev.task_id = task.task_id;
  ev.execs = task.exec_count;
  ev.fes_l = task.fes_l_used;
  ev.improved = improved;
  ev.cooperated = plan.has_value();
  ev.terminated = task.terminated;
  return ev;
}

/// One full competition over the p freshly activated tasks: roulette-driven
/// executions in rounds, cooperative mixing when a source qualifies, and
/// exit once floor(p/2) tasks have terminated. Always returns exactly
/// floor(p/2) elite pairs.
inline std::vector<BestPair> drc(const std::vector<Eigen::VectorXd>& pop_u,
                                 const EsState& upper_es,
                                 const BilevelProblem& prob,
                                 const RunConfig& cfg, EvalCounter& counter,
                                 long long upper_gen,
                                 std::vector<TraceEvent>& trace,
                                 StopMonitor* monitor = nullptr) {
  auto [tasks, archive] =
      activate(pop_u, upper_es, prob, cfg, counter, upper_gen, trace, monitor);
  const int p = static_cast<int>(tasks.size());
  const std::size_t quota = static_cast<std::size_t>(p / 2);

  std::vector<BestPair> elites;
  std::size_t terminated_count = 0;
  for (const LowerTask& t : tasks)
    if (t.terminated) {
      elites.push_back(t.best);
      ++terminated_count;
    }

  const auto active_histories = [&tasks] {
    std::vector<TaskHistory> out;
    for (const LowerTask& t : tasks)
      if (!t.terminated) out.push_back(t.history);
    return out;
  };
  const auto stopped = [&] { return monitor != nullptr && monitor->stop; };

  RngStream sched(derive_seed(cfg.seed, kStreamSched,
                              static_cast<std::uint64_t>(upper_gen), 0));
  ProbabilityVector probs;
  {
    const std::vector<TaskHistory> hist = active_histories();
    if (terminated_count < quota && !stopped() && !hist.empty())
      probs = selection_probabilities(hist, cfg.spu);
  }

  int round = 0;
  while (terminated_count < quota && !stopped() && !probs.empty()) {
    ++round;
    for (int slot = 1; slot <= p; ++slot) {
      if (stopped() || probs.empty()) break;
      if (!cfg.strict_rounds && terminated_count >= quota) break;
      const int id = roulette_select(probs, sched);
      LowerTask& task = *std::find_if(
          tasks.begin(), tasks.end(),
          [id](const LowerTask& t) { return t.task_id == id; });

      std::optional<CooperationPlan> plan;
      if (task.exec_count >= cfg.cic.min_execs) {
        std::vector<TaskSnapshot> cands;
        cands.reserve(tasks.size());
        for (const LowerTask& t : tasks) cands.push_back(detail::snapshot(t));
        plan = plan_cooperation(detail::snapshot(task), cands, cfg.cic);
      }

      TraceEvent ev = execute_task(task, plan, tasks, prob, cfg, counter,
                                   archive, monitor);
      ev.upper_gen = upper_gen;
      ev.round = round;
      ev.slot = slot;
      trace.push_back(ev);

      if (task.terminated) {
        elites.push_back(task.best);
        ++terminated_count;
        const std::vector<TaskHistory> hist = active_histories();
        probs = hist.empty() ? ProbabilityVector{}
                             : selection_probabilities(hist, cfg.spu);
      }
    }
    if (terminated_count < quota && !stopped() && !probs.empty())
      probs = selection_probabilities(active_histories(), cfg.spu);
  }

  const auto deb_pair_order = [](const BestPair& a, const BestPair& b) {
    return deb_compare(a.up, b.up) < 0;
  };
  if (elites.size() > quota) {
    std::stable_sort(elites.begin(), elites.end(), deb_pair_order);
    elites.resize(quota);
  } else if (elites.size() < quota) {
    std::vector<BestPair> rest;
    for (const LowerTask& t : tasks)
      if (!t.terminated) rest.push_back(t.best);
    std::stable_sort(rest.begin(), rest.end(), deb_pair_order);
    for (const BestPair& pair : rest) {
      if (elites.size() >= quota) break;
      elites.push_back(pair);
    }
  }
  return elites;
}

/// Outcome of one full run.
struct RunResult {
  BestPair best;
  double acc_u = 0.0;
  double acc_l = 0.0;
  long long fes_u = 0;
  long long fes_l = 0;
  long long upper_generations = 0;
  std::vector<TraceEvent> trace;
};

namespace detail {

inline EsState init_upper_es(const BilevelProblem& prob, const RunConfig& cfg,
                             const Box& box) {
  RngStream init_rng(derive_seed(cfg.seed, kStreamInit, 0, 0));
  const int dim = box.dim();
  Eigen::VectorXd mean0(dim);
  for (int i = 0; i < dim; ++i) mean0(i) = init_rng.uniform(box.lb(i), box.ub(i));
  const Eigen::ArrayXd width = box.ub - box.lb;
  const Eigen::MatrixXd cov0 = (width * width).matrix().asDiagonal();
  return init_es(dim, mean0, 0.3, cov0, cfg.pop_u);
}

inline void update_upper(EsState& upper_es, const std::vector<BestPair>& pairs) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return deb_compare(pairs[a].up, pairs[b].up) < 0;
                   });
  std::vector<Candidate> ranked;
  ranked.reserve(pairs.size());
  for (std::size_t i : order) {
    Eigen::VectorXd joint(pairs[i].x_u.size() + pairs[i].x_l.size());
    joint << pairs[i].x_u, pairs[i].x_l;
    ranked.push_back({std::move(joint), pairs[i].up.value, pairs[i].up.cv});
  }
  update(upper_es, ranked);
}

inline RunResult finish_run(const StopMonitor& monitor,
                            const BilevelProblem& prob,
                            const EvalCounter& counter, long long gens,
                            std::vector<TraceEvent>&& trace) {
  RunResult out;
  if (!monitor.has_incumbent())
    throw std::logic_error("solve: no upper evaluation was recorded");
  out.best = monitor.incumbent();
  out.acc_u = accuracy(out.best.up.value, prob.f_star);
  out.acc_l = accuracy(out.best.lo.value, prob.little_f_star);
  out.fes_u = counter.fes_u;
  out.fes_l = counter.fes_l;
  out.upper_generations = gens;
  out.trace = std::move(trace);
  return out;
}

}  // namespace detail

/// Full bilevel run with competitive lower-level scheduling.
inline RunResult solve(const BilevelProblem& prob, const RunConfig& cfg_in) {
  const RunConfig cfg = resolve_config(cfg_in, prob);
  const Box box = detail::joint_box(prob);
  EvalCounter counter;
  StopMonitor monitor{&prob, &cfg, &counter};
  EsState upper_es = detail::init_upper_es(prob, cfg, box);
  RngStream upper_rng(derive_seed(cfg.seed, kStreamUpper, 0, 0));
  std::vector<TraceEvent> trace;
  long long gen = 0;
  while (!monitor.stop && counter.fes_u < cfg.fes_u_max) {
    const std::vector<Eigen::VectorXd> pop =
        sample_in_box(upper_es, cfg.pop_u, box, upper_rng);
    const std::vector<BestPair> elites =
        drc(pop, upper_es, prob, cfg, counter, gen, trace, &monitor);
    detail::update_upper(upper_es, elites);
    monitor.commit_generation();
    ++gen;
  }
  return detail::finish_run(monitor, prob, counter, gen, std::move(trace));
}

/// Baseline with the same outer loop and budgets, but each lower-level task
/// runs to its own termination in turn and every pair joins the upper
/// update.
inline RunResult nested_solve(const BilevelProblem& prob,
                              const RunConfig& cfg_in) {
  const RunConfig cfg = resolve_config(cfg_in, prob);
  const int m = prob.dim_u;
  const int n = prob.dim_l;
  const int q = cfg.pop_l;
  const Box box = detail::joint_box(prob);
  EvalCounter counter;
  StopMonitor monitor{&prob, &cfg, &counter};
  EsState upper_es = detail::init_upper_es(prob, cfg, box);
  RngStream upper_rng(derive_seed(cfg.seed, kStreamUpper, 0, 0));
  std::vector<int> lower_coords(static_cast<std::size_t>(n));
  std::iota(lower_coords.begin(), lower_coords.end(), m);
  std::vector<TraceEvent> trace;
  long long gen = 0;
  while (!monitor.stop && counter.fes_u < cfg.fes_u_max) {
    const std::vector<Eigen::VectorXd> pop =
        sample_in_box(upper_es, cfg.pop_u, box, upper_rng);
    Eigen::VectorXd marg_mean;
    Eigen::MatrixXd marg_cov;
    double marg_sigma = 0.0;
    marginal(upper_es, lower_coords, marg_mean, marg_cov, marg_sigma);

    std::vector<BestPair> pairs;
    for (int i = 0; i < cfg.pop_u && !monitor.stop; ++i) {
      LowerTask t;
      t.task_id = i + 1;
      t.x_u = pop[static_cast<std::size_t>(i)].head(m);
      t.es = init_es(n, pop[static_cast<std::size_t>(i)].tail(n), marg_sigma,
                     marg_cov, q);
      t.stream = RngStream(derive_seed(cfg.seed, kStreamTask,
                                       static_cast<std::uint64_t>(gen),
                                       static_cast<std::uint64_t>(t.task_id)));
      bool have_best = false;
      Eigen::VectorXd best_x;
      LowerEval best_lo;
      while (!t.terminated) {
        const std::vector<Eigen::VectorXd> xs =
            sample_in_box(t.es, q, prob.bounds_l, t.stream);
        std::vector<LowerEval> evals;
        evals.reserve(xs.size());
        for (const Eigen::VectorXd& x : xs)
          evals.push_back(evaluate_lower(prob, t.x_u, x, counter));
        t.fes_l_used += q;
        update(t.es, detail::deb_ranked(xs, evals));
        const std::size_t b = detail::deb_best_index(evals, evals.size());
        if (!have_best || deb_compare(evals[b], best_lo) < 0) {
          best_x = xs[b];
          best_lo = evals[b];
          have_best = true;
        }
        t.exec_count += 1;
        t.elite_window.push_back(best_lo.value);
        detail::check_lower_termination(t, cfg);
        trace.push_back({gen, t.exec_count, i + 1, t.task_id, t.exec_count,
                         t.fes_l_used, t.terminated, false, t.terminated});
      }
      const UpperEval up = evaluate_upper(prob, t.x_u, best_x, counter);
      const BestPair pair{t.x_u, best_x, up, best_lo};
      pairs.push_back(pair);
      monitor.note_terminated(pair);
      monitor.note_upper_eval(pair);
    }
    if (!pairs.empty()) detail::update_upper(upper_es, pairs);
    monitor.commit_generation();
    ++gen;
  }
  return detail::finish_run(monitor, prob, counter, gen, std::move(trace));
}

/// Recomputes the two FE counters implied by a trace: every row is one
/// lower-level generation of q evaluations; upper evaluations occur on every
/// activation row and on improving competition rows.
inline std::pair<long long, long long> replay_fes(
    const std::vector<TraceEvent>& trace, int q) {
  long long fes_u = 0;
  long long fes_l = 0;
  for (const TraceEvent& ev : trace) {
    fes_l += q;
    if (ev.round == 0 || ev.improved) ++fes_u;
  }
  return {fes_u, fes_l};
}

}  // namespace drc
