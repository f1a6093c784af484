#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "drc/es.hpp"

namespace drc {

/// Objective value plus constraint slacks; a positive slack is a violation
/// of that magnitude.
struct LevelEval {
  double value = 0.0;
  Eigen::ArrayXd slacks;
};

using LevelFn =
    std::function<LevelEval(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Upper-level evaluation: cv aggregates both levels at the same point.
struct UpperEval {
  double value = 0.0;
  double cv = 0.0;
};

/// Lower-level evaluation: cv covers the lower constraints only.
struct LowerEval {
  double value = 0.0;
  double cv = 0.0;
};

/// Exact per-level function-evaluation accounting.
struct EvalCounter {
  long long fes_u = 0;
  long long fes_l = 0;

  long long total() const { return fes_u + fes_l; }
};

/// Leader/follower problem pair with known optimal objective values.
struct BilevelProblem {
  std::string name;
  int dim_u = 0;
  int dim_l = 0;
  Box bounds_u;
  Box bounds_l;
  LevelFn upper_fn;  // (x_u, x_l) -> (F, upper slacks)
  LevelFn lower_fn;  // (x_u, x_l) -> (f, lower slacks)
  int n_con_u = 0;
  int n_con_l = 0;
  double f_star = 0.0;
  double little_f_star = 0.0;
  // Optional reference optimum (x_u*, x_l*) achieving (f_star, little_f_star).
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> reference_optimum;
};

inline double violation_sum(const Eigen::ArrayXd& slacks) {
  return slacks.size() == 0 ? 0.0 : slacks.max(0.0).sum();
}

/// One upper-level FE. cv = upper violations + lower violations at the same
/// point; the lower constraint values are part of this upper call and do not
/// count as a lower FE.
inline UpperEval evaluate_upper(const BilevelProblem& p,
                                const Eigen::VectorXd& x_u,
                                const Eigen::VectorXd& x_l,
                                EvalCounter& counter) {
  LevelEval up = p.upper_fn(x_u, x_l);
  double cv = violation_sum(up.slacks);
  if (p.n_con_l > 0) cv += violation_sum(p.lower_fn(x_u, x_l).slacks);
  counter.fes_u += 1;
  return UpperEval{up.value, cv};
}

/// One lower-level FE.
inline LowerEval evaluate_lower(const BilevelProblem& p,
                                const Eigen::VectorXd& x_u,
                                const Eigen::VectorXd& x_l,
                                EvalCounter& counter) {
  LevelEval lo = p.lower_fn(x_u, x_l);
  counter.fes_l += 1;
  return LowerEval{lo.value, violation_sum(lo.slacks)};
}

/// Constrained preference: feasible beats infeasible, then smaller value,
/// then smaller violation. Returns -1 (a better), +1 (b better), 0 (tie).
inline int deb_compare(double a_value, double a_cv, double b_value,
                       double b_cv) {
  if (std::isnan(a_value) || std::isnan(a_cv) || std::isnan(b_value) ||
      std::isnan(b_cv))
    throw std::invalid_argument("NaN in comparison");
  const bool a_feas = a_cv == 0.0;
  const bool b_feas = b_cv == 0.0;
  if (a_feas != b_feas) return a_feas ? -1 : 1;
  if (a_feas) {
    if (a_value < b_value) return -1;
    if (b_value < a_value) return 1;
    return 0;
  }
  if (a_cv < b_cv) return -1;
  if (b_cv < a_cv) return 1;
  return 0;
}

inline int deb_compare(const UpperEval& a, const UpperEval& b) {
  return deb_compare(a.value, a.cv, b.value, b.cv);
}

inline int deb_compare(const LowerEval& a, const LowerEval& b) {
  return deb_compare(a.value, a.cv, b.value, b.cv);
}

template <typename Eval>
inline bool deb_better(const Eval& a, const Eval& b) {
  return deb_compare(a, b) < 0;
}

inline Box uniform_box(int dim, double lo, double hi) {
  Box b;
  b.lb = Eigen::ArrayXd::Constant(dim, lo);
  b.ub = Eigen::ArrayXd::Constant(dim, hi);
  return b;
}

/// Analytic test problem: F = |x_u - a|^2 + |x_l - x_u|^2, f = |x_l - x_u|^2,
/// unconstrained, bounds [-5,10]^d at both levels. The lower response is
/// x_l = x_u and the global optimum is x_u = a with F* = f* = 0.
inline BilevelProblem make_synthetic_quadratic(int d,
                                               const Eigen::VectorXd& a) {
  if (d < 1) throw std::invalid_argument("d must be positive");
  if (a.size() != d) throw std::invalid_argument("a size mismatch");
  if ((a.array() < -5.0).any() || (a.array() > 10.0).any())
    throw std::invalid_argument("a out of bounds");

  BilevelProblem p;
  p.name = "synthq-" + std::to_string(d);
  p.dim_u = d;
  p.dim_l = d;
  p.bounds_u = uniform_box(d, -5.0, 10.0);
  p.bounds_l = uniform_box(d, -5.0, 10.0);
  p.upper_fn = [a](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
    return LevelEval{(xu - a).squaredNorm() + (xl - xu).squaredNorm(),
                     Eigen::ArrayXd()};
  };
  p.lower_fn = [](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
    return LevelEval{(xl - xu).squaredNorm(), Eigen::ArrayXd()};
  };
  p.f_star = 0.0;
  p.little_f_star = 0.0;
  p.reference_optimum = {{a, a}};
  return p;
}

}  // namespace drc
