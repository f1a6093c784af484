#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <drc/es.hpp>

namespace drc {

/// Tuning knobs for cooperation between competing lower-level tasks.
struct CicConfig {
  double alpha = 0.5;
  int min_execs = 3;
  bool normalize_weights = true;
  int history_window = 3;
};

/// Read-only view of a task used for cooperation planning.
struct TaskSnapshot {
  int task_id = 0;
  Eigen::VectorXd x_u;
  int exec_count = 0;
  std::vector<Eigen::VectorXd> mean_history;
  Eigen::VectorXd best_x_l;
  bool terminated = false;
};

/// Mixing recipe produced by plan_cooperation: per-source intensities, the
/// target's own weight, and a navigational lower-level solution.
struct CooperationPlan {
  int target_id = 0;
  std::vector<std::pair<int, double>> sources;
  double target_weight = 0.0;
  Eigen::VectorXd navi;
};

inline void validate_cic_config(const CicConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
    throw std::invalid_argument("cic: alpha must lie in [0, 1]");
  if (cfg.min_execs < 1)
    throw std::invalid_argument("cic: min_execs must be at least 1");
  if (cfg.history_window != 3)
    throw std::invalid_argument("cic: history_window is fixed at 3");
}

/// Fractional-norm distance (Sum |a_i - b_i|^(1/m))^m with m the vector
/// length; emphasizes agreement in individual coordinates.
inline double fractional_distance(const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cic: distance inputs differ in length");
  const double m = static_cast<double>(a.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    acc += std::pow(std::abs(a(i) - b(i)), 1.0 / m);
  return std::pow(acc, m);
}

/// Sample standard deviation of the last three mean vectors, averaged over
/// dimensions; empty when fewer than three means have been recorded.
inline std::optional<double> mean_fluctuation(
    const std::vector<Eigen::VectorXd>& mean_history) {
  if (mean_history.size() < 3) return std::nullopt;
  const Eigen::VectorXd& m0 = mean_history[mean_history.size() - 3];
  const Eigen::VectorXd& m1 = mean_history[mean_history.size() - 2];
  const Eigen::VectorXd& m2 = mean_history[mean_history.size() - 1];
  if (m0.size() != m1.size() || m1.size() != m2.size())
    throw std::invalid_argument("cic: mean history dimensions disagree");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m0.size(); ++i) {
    const double mean = (m0(i) + m1(i) + m2(i)) / 3.0;
    const double var = ((m0(i) - mean) * (m0(i) - mean) +
                        (m1(i) - mean) * (m1(i) - mean) +
                        (m2(i) - mean) * (m2(i) - mean)) /
                       2.0;
    acc += std::sqrt(var);
  }
  return acc / static_cast<double>(m0.size());
}

/// Selects stable, nearby peers as cooperation sources for the target and
/// assigns mixing weights; empty when nothing qualifies.
inline std::optional<CooperationPlan> plan_cooperation(
    const TaskSnapshot& target, const std::vector<TaskSnapshot>& candidates,
    const CicConfig& cfg) {
  validate_cic_config(cfg);
  if (target.exec_count < cfg.min_execs) return std::nullopt;
  const std::optional<double> fluct_t = mean_fluctuation(target.mean_history);
  if (!fluct_t) return std::nullopt;
  const double std_t = *fluct_t;

  struct Qualified {
    const TaskSnapshot* snap;
    double std_s;
    double dist;
  };
  std::vector<Qualified> pool;
  for (const TaskSnapshot& c : candidates) {
    if (c.task_id == target.task_id || c.terminated) continue;
    if (c.exec_count < cfg.min_execs) continue;
    const std::optional<double> fluct_s = mean_fluctuation(c.mean_history);
    if (!fluct_s || !(*fluct_s < std_t)) continue;
    pool.push_back({&c, *fluct_s, fractional_distance(c.x_u, target.x_u)});
  }
  if (pool.empty()) return std::nullopt;

  std::sort(pool.begin(), pool.end(), [](const Qualified& a, const Qualified& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.snap->task_id < b.snap->task_id;
  });
  pool.resize((pool.size() + 1) / 2);

  constexpr double kGuard = 1e-12;
  double sum_std = 0.0;
  double sum_dist = 0.0;
  for (const Qualified& q : pool) {
    sum_std += q.std_s;
    sum_dist += q.dist;
  }
  const double std_den = std_t + sum_std;
  const double s = static_cast<double>(pool.size());

  CooperationPlan plan;
  plan.target_id = target.task_id;
  plan.target_weight = 1.0 - cfg.alpha * std_t / std_den;
  double total = plan.target_weight;
  for (const Qualified& q : pool) {
    const double dist_share = sum_dist <= kGuard ? 1.0 / s : q.dist / sum_dist;
    const double ci = 1.0 - cfg.alpha * q.std_s / std_den -
                      (1.0 - cfg.alpha) * dist_share;
    plan.sources.emplace_back(q.snap->task_id, ci);
    total += ci;
  }
  if (cfg.normalize_weights) {
    plan.target_weight /= total;
    for (auto& [id, w] : plan.sources) w /= total;
  }

  const Qualified* best = &pool.front();
  double best_ci = plan.sources.front().second;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double ci = plan.sources[i].second;
    if (ci > best_ci ||
        (ci == best_ci && pool[i].snap->task_id < best->snap->task_id)) {
      best = &pool[i];
      best_ci = ci;
    }
  }
  plan.navi = best->snap->best_x_l;
  return plan;
}

/// Blends the target's search distribution with its sources' using the plan
/// weights; step size, paths, and history are left untouched.
inline EsState apply_cooperation(const EsState& target,
                                 const std::vector<EsState>& source_states,
                                 const CooperationPlan& plan) {
  if (source_states.size() != plan.sources.size())
    throw std::invalid_argument("cic: plan and source states disagree");
  EsState out = target;
  Eigen::VectorXd mean = plan.target_weight * target.mean;
  Eigen::MatrixXd cov = plan.target_weight * target.cov;
  for (std::size_t i = 0; i < source_states.size(); ++i) {
    const EsState& src = source_states[i];
    if (src.dim != target.dim)
      throw std::invalid_argument("cic: source dimension mismatch");
    const double w = plan.sources[i].second;
    mean += w * src.mean;
    cov += w * src.cov;
  }
  out.mean = std::move(mean);
  out.cov = std::move(cov);
  detail::repair_cov(out);
  return out;
}

}  // namespace drc
