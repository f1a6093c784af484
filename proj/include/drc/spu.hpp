#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

namespace drc {

/// Tuning knobs for the task-selection probability update.
struct SpuConfig {
  double gamma = 0.5;
  double epsilon = 1.1;
  double w_bs = 0.1;
  double w_pf = 0.7;
  double w_pt = 0.2;
  double denom_guard = 1e-12;
};

/// Per-task execution record on the internal maximization scale
/// (larger fitness is better).
struct TaskHistory {
  int task_id = 0;
  std::vector<double> fit_series;
  std::vector<double> pt_series;
  int exec_count = 0;
};

/// Best and worst internal fitness across the latest pair of every task.
struct GlobalEnvelope {
  double fit_gb = 0.0;
  double fit_gw = 0.0;
};

using ProbabilityVector = std::map<int, double>;

inline void validate_spu_config(const SpuConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
    throw std::invalid_argument("spu: gamma must lie in [0, 1]");
  if (!(cfg.epsilon > 1.0))
    throw std::invalid_argument("spu: epsilon must exceed 1");
  if (cfg.w_bs < 0.0 || cfg.w_pf < 0.0 || cfg.w_pt < 0.0 ||
      std::abs(cfg.w_bs + cfg.w_pf + cfg.w_pt - 1.0) > 1e-12)
    throw std::invalid_argument("spu: weights must be non-negative and sum to 1");
  if (!(cfg.denom_guard > 0.0))
    throw std::invalid_argument("spu: denom_guard must be positive");
}

/// Discount-weighted mean of a series, most recent entry weighted 1 and
/// each step into the past multiplied by gamma.
inline double discounted_mean(const std::vector<double>& series, double gamma) {
  if (series.empty())
    throw std::invalid_argument("spu: discounted mean of an empty series");
  double num = 0.0;
  double den = 0.0;
  double w = 1.0;
  for (std::size_t i = series.size(); i-- > 0;) {
    num += w * series[i];
    den += w;
    w *= gamma;
  }
  return num / den;
}

/// Recency-discounted competing fitness of one task.
inline double competing_fitness(const TaskHistory& history, double gamma) {
  return discounted_mean(history.fit_series, gamma);
}

/// Relative fitness change of one execution, rewarded when it beats the
/// global best and penalized when it undercuts the global worst.
inline double evolving_potential(double fit_new, double fit_prev,
                                 const GlobalEnvelope& env,
                                 double guard = 1e-12) {
  const double d_prev = std::max(std::abs(fit_prev), guard);
  const double d_gb = std::max(std::abs(env.fit_gb), guard);
  const double d_gw = std::max(std::abs(env.fit_gw), guard);
  double pt = (fit_new - fit_prev) / d_prev;
  pt += std::max((fit_new - env.fit_gb) / d_gb, 0.0);
  pt += std::min((fit_new - env.fit_gw) / d_gw, 0.0);
  return pt;
}

/// Discounted aggregate of a task's evolving potentials; zero until the
/// task has been executed at least twice.
inline double competing_potential(const std::vector<double>& pt_series,
                                  double gamma) {
  if (pt_series.empty()) return 0.0;
  return discounted_mean(pt_series, gamma);
}

/// Selection distribution over the active tasks: a weighted blend of a
/// uniform baseline, fitness-proportional shares over the worst competing
/// fitness, and an exponential transform of the competing potentials.
inline ProbabilityVector selection_probabilities(
    const std::vector<TaskHistory>& active, const SpuConfig& cfg) {
  validate_spu_config(cfg);
  const std::size_t k = active.size();
  if (k == 0)
    throw std::invalid_argument("spu: no active tasks");
  for (const TaskHistory& h : active) {
    if (h.exec_count < 1 ||
        h.fit_series.size() != static_cast<std::size_t>(h.exec_count) ||
        h.pt_series.size() != static_cast<std::size_t>(h.exec_count - 1))
      throw std::invalid_argument("spu: inconsistent task history");
  }

  std::vector<double> cf(k), cp(k);
  for (std::size_t i = 0; i < k; ++i) {
    cf[i] = competing_fitness(active[i], cfg.gamma);
    cp[i] = competing_potential(active[i].pt_series, cfg.gamma);
  }

  const double cf_worst = *std::min_element(cf.begin(), cf.end());
  double pf_den = 0.0;
  for (double v : cf) pf_den += v - cf_worst;
  std::vector<double> p_pf(k);
  for (std::size_t i = 0; i < k; ++i)
    p_pf[i] = pf_den <= cfg.denom_guard ? 1.0 / static_cast<double>(k)
                                        : (cf[i] - cf_worst) / pf_den;

  const double log_eps = std::log(cfg.epsilon);
  const double cp_cap = 700.0 / log_eps;
  double cp_max = -cp_cap;
  for (double& v : cp) {
    v = std::clamp(v, -cp_cap, cp_cap);
    cp_max = std::max(cp_max, v);
  }
  std::vector<double> p_pt(k);
  double pt_den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p_pt[i] = std::exp((cp[i] - cp_max) * log_eps);
    pt_den += p_pt[i];
  }
  for (double& v : p_pt) v /= pt_den;

  std::vector<double> p(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = cfg.w_bs / static_cast<double>(k) + cfg.w_pf * p_pf[i] +
           cfg.w_pt * p_pt[i];
    total += p[i];
  }

  ProbabilityVector out;
  for (std::size_t i = 0; i < k; ++i)
    out[active[i].task_id] = p[i] / total;
  return out;
}

}  // namespace drc
