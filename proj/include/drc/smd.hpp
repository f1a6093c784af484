#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "drc/problem.hpp"

namespace drc {

/// Variable-group sizes: x_u = (xu1 in R^pu, xu2 in R^r),
/// x_l = (xl1 in R^ql, xl2 in R^r). Problem 6 widens xl1 by s extra
/// coordinates, so there n = ql + s + r.
struct SmdSplit {
  int pu = 0;
  int ql = 0;
  int r = 0;
  int s = 0;  // problem 6 only
};

namespace smd_detail {

inline double sq(double v) { return v * v; }

inline double cube(double v) { return v * v * v; }

inline double sum_sq(const Eigen::VectorXd& v) { return v.squaredNorm(); }

/// Sum_{i=1}^{k-1} (x_{i+1} - x_i^2)^2 + (x_i - 1)^2 over the first k coords.
inline double banana(const Eigen::VectorXd& x, int k) {
  double acc = 0.0;
  for (int i = 0; i + 1 < k; ++i)
    acc += sq(x(i + 1) - x(i) * x(i)) + sq(x(i) - 1.0);
  return acc;
}

/// k + Sum_i x_i^2 - cos(2 pi x_i) over the first k coords.
inline double rippled_sphere(const Eigen::VectorXd& x, int k) {
  double acc = double(k);
  for (int i = 0; i < k; ++i)
    acc += x(i) * x(i) - std::cos(2.0 * std::numbers::pi * x(i));
  return acc;
}

inline SmdSplit default_split(int id, int m, int n) {
  SmdSplit sp;
  if (m == 2 && n == 3) {
    sp = {1, 2, 1, 0};
    if (id == 6) sp = {1, 0, 1, 2};
  } else if (m == 10 && n == 10) {
    sp = {5, 5, 5, 0};
    if (id == 6) sp = {5, 3, 5, 2};
  } else if (m == 30 && n == 30) {
    sp = {15, 15, 15, 0};
    if (id == 6) sp = {15, 13, 15, 2};
  } else {
    throw std::invalid_argument(
        "no default variable-group split for (" + std::to_string(m) + "," +
        std::to_string(n) + "); supply explicit group sizes");
  }
  return sp;
}

inline void validate_split(int id, int m, int n, const SmdSplit& sp) {
  if (sp.pu < 1 || sp.r < 1)
    throw std::invalid_argument("group sizes pu and r must be at least 1");
  if (sp.pu + sp.r != m)
    throw std::invalid_argument("upper groups do not sum to m");
  if (id == 6) {
    if (sp.ql < 0 || sp.s < 2 || sp.s % 2 != 0)
      throw std::invalid_argument("problem 6 needs ql >= 0 and even s >= 2");
    if (sp.ql + sp.s + sp.r != n)
      throw std::invalid_argument("lower groups do not sum to n");
  } else {
    if (sp.ql < 1) throw std::invalid_argument("group size ql must be >= 1");
    if (sp.ql + sp.r != n)
      throw std::invalid_argument("lower groups do not sum to n");
    if ((id == 5 || id == 8) && sp.ql < 2)
      throw std::invalid_argument("problems 5 and 8 need ql >= 2");
  }
}

inline Box concat_box(const Box& a, const Box& b) {
  Box out;
  out.lb.resize(a.lb.size() + b.lb.size());
  out.ub.resize(a.ub.size() + b.ub.size());
  out.lb << a.lb, b.lb;
  out.ub << a.ub, b.ub;
  return out;
}

}  // namespace smd_detail

/// Factory for the 12-problem bilevel benchmark family. Default group splits
/// are provided for (m,n) in {(2,3),(10,10),(30,30)}; other shapes need
/// explicit group sizes.
inline BilevelProblem make_smd(int id, int m, int n,
                               std::optional<SmdSplit> split = std::nullopt) {
  using namespace smd_detail;
  if (id < 1 || id > 12)
    throw std::invalid_argument("unknown problem id smd" + std::to_string(id));
  if (m < 2 || n < 2) throw std::invalid_argument("need m >= 2 and n >= 2");
  SmdSplit sp = split ? *split : default_split(id, m, n);
  validate_split(id, m, n, sp);

  const int pu = sp.pu, ql = sp.ql, r = sp.r, s = sp.s;
  const int ql_full = (id == 6) ? ql + s : ql;  // width of the xl1 block
  const double pi = std::numbers::pi;
  const double e = std::numbers::e;
  const double eps = 1e-6;  // inset for open interval endpoints

  BilevelProblem p;
  p.name = "smd" + std::to_string(id);
  p.dim_u = m;
  p.dim_l = n;

  Box xu1_box = uniform_box(pu, -5.0, 10.0);
  Box xu2_box = uniform_box(r, -5.0, 10.0);
  Box xl1_box = uniform_box(ql_full, -5.0, 10.0);
  Box xl2_box = uniform_box(r, -5.0, 10.0);
  switch (id) {
    case 1:
    case 3:
    case 10:
      xl2_box = uniform_box(r, -pi / 2 + eps, pi / 2 - eps);
      break;
    case 2:
    case 7:
      xu2_box = uniform_box(r, -5.0, 1.0);
      xl2_box = uniform_box(r, eps, e);
      break;
    case 4:
      xu2_box = uniform_box(r, -1.0, 1.0);
      xl2_box = uniform_box(r, 0.0, e);
      break;
    case 9:
      xu2_box = uniform_box(r, -5.0, 1.0);
      xl2_box = uniform_box(r, -1.0 + eps, -1.0 + e);
      break;
    case 11:
      xu2_box = uniform_box(r, -1.0, 1.0);
      xl2_box = uniform_box(r, 1.0 / e, e);
      break;
    case 12:
      xu2_box = uniform_box(r, -1.0, 1.0);
      xl2_box = uniform_box(r, -pi / 4, pi / 4);
      break;
    default:
      break;  // 5, 6, 8 keep [-5, 10] everywhere
  }
  p.bounds_u = concat_box(xu1_box, xu2_box);
  p.bounds_l = concat_box(xl1_box, xl2_box);

  auto xu1 = [pu](const Eigen::VectorXd& xu) { return xu.head(pu); };
  auto xu2 = [r](const Eigen::VectorXd& xu) { return xu.tail(r); };
  auto xl1 = [ql_full](const Eigen::VectorXd& xl) {
    return xl.head(ql_full);
  };
  auto xl2 = [r](const Eigen::VectorXd& xl) { return xl.tail(r); };

  // One upper constraint per coordinate of a vector v (cubic interaction):
  // v_j - sum_{i != j} v_i^3 >= 0, emitted as violation slacks.
  auto cubic_slacks = [](const Eigen::VectorXd& v, Eigen::ArrayXd& out,
                         int offset) {
    double cube_sum = 0.0;
    for (int i = 0; i < v.size(); ++i) cube_sum += cube(v(i));
    for (int j = 0; j < v.size(); ++j)
      out(offset + j) = (cube_sum - cube(v(j))) - v(j);
  };

  switch (id) {
    case 1: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) + sq(xu2(xu)(i) - std::tan(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3,
                         Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - std::tan(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3,
                         Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      p.reference_optimum = {
          {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)}};
      break;
    }
    case 2: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) - sq(xu2(xu)(i) - std::log(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) - sum_sq(xl1(xl)) + f3,
                         Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - std::log(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3,
                         Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      Eigen::VectorXd xl_star = Eigen::VectorXd::Zero(n);
      xl_star.tail(r).setOnes();
      p.reference_optimum = {{Eigen::VectorXd::Zero(m), xl_star}};
      break;
    }
    case 3: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) +
                sq(sq(xu2(xu)(i)) - std::tan(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3,
                         Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(sq(xu2(xu)(i)) - std::tan(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) +
                             rippled_sphere(xl1(xl), ql) + f3,
                         Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      p.reference_optimum = {
          {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)}};
      break;
    }
    case 4: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) -
                sq(std::abs(xu2(xu)(i)) - std::log(1.0 + xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) - sum_sq(xl1(xl)) + f3,
                         Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(std::abs(xu2(xu)(i)) - std::log(1.0 + xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) +
                             rippled_sphere(xl1(xl), ql) + f3,
                         Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      p.reference_optimum = {
          {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)}};
      break;
    }
    case 5: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) -
                sq(std::abs(xu2(xu)(i)) - sq(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) - banana(xl1(xl), ql) + f3,
                         Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(std::abs(xu2(xu)(i)) - sq(xl2(xl)(i)));
        return LevelEval{sum_sq(xu1(xu)) + banana(xl1(xl), ql) + f3,
                         Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      Eigen::VectorXd xl_star = Eigen::VectorXd::Zero(n);
      xl_star.head(ql).setOnes();
      p.reference_optimum = {{Eigen::VectorXd::Zero(m), xl_star}};
      break;
    }
    case 6: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f2 = 0.0;
        for (int i = 0; i < ql; ++i) f2 -= sq(xl1(xl)(i));
        for (int i = ql; i < ql + s; ++i) f2 += sq(xl1(xl)(i));
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) - sq(xu2(xu)(i) - xl2(xl)(i));
        return LevelEval{sum_sq(xu1(xu)) + f2 + f3, Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f2 = 0.0;
        for (int i = 0; i < ql; ++i) f2 += sq(xl1(xl)(i));
        for (int i = ql; i + 1 < ql + s; i += 2)
          f2 += sq(xl1(xl)(i + 1) - xl1(xl)(i));
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - xl2(xl)(i));
        return LevelEval{sum_sq(xu1(xu)) + f2 + f3, Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      p.reference_optimum = {
          {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)}};
      break;
    }
    case 7: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double prod = 1.0;
        for (int i = 0; i < pu; ++i)
          prod *= std::cos(xu1(xu)(i) / std::sqrt(i + 1.0));
        const double f1 = 1.0 + sum_sq(xu1(xu)) / 400.0 - prod;
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) - sq(xu2(xu)(i) - std::log(xl2(xl)(i)));
        return LevelEval{f1 - sum_sq(xl1(xl)) + f3, Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f1 = 0.0;
        for (int i = 0; i < pu; ++i) f1 += cube(xu1(xu)(i));
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - std::log(xl2(xl)(i)));
        return LevelEval{f1 + sum_sq(xl1(xl)) + f3, Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      Eigen::VectorXd xl_star = Eigen::VectorXd::Zero(n);
      xl_star.tail(r).setOnes();
      p.reference_optimum = {{Eigen::VectorXd::Zero(m), xl_star}};
      break;
    }
    case 8: {
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double cos_acc = 0.0;
        for (int i = 0; i < pu; ++i)
          cos_acc += std::cos(2.0 * pi * xu1(xu)(i));
        const double f1 =
            20.0 + e -
            20.0 * std::exp(-0.2 * std::sqrt(sum_sq(xu1(xu)) / pu)) -
            std::exp(cos_acc / pu);
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) - sq(xu2(xu)(i) - cube(xl2(xl)(i)));
        return LevelEval{f1 - banana(xl1(xl), ql) + f3, Eigen::ArrayXd()};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f1 = 0.0;
        for (int i = 0; i < pu; ++i) f1 += std::abs(xu1(xu)(i));
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - cube(xl2(xl)(i)));
        return LevelEval{f1 + banana(xl1(xl), ql) + f3, Eigen::ArrayXd()};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      Eigen::VectorXd xl_star = Eigen::VectorXd::Zero(n);
      xl_star.head(ql).setOnes();
      p.reference_optimum = {{Eigen::VectorXd::Zero(m), xl_star}};
      break;
    }
    case 9: {
      p.n_con_u = 1;
      p.n_con_l = 1;
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i)) -
                sq(xu2(xu)(i) - std::log(1.0 + xl2(xl)(i)));
        const double su = sum_sq(xu);
        Eigen::ArrayXd slack(1);
        slack(0) = std::floor(su + 0.5) - su;
        return LevelEval{sum_sq(xu1(xu)) - sum_sq(xl1(xl)) + f3, slack};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - std::log(1.0 + xl2(xl)(i)));
        const double sl = sum_sq(xl);
        Eigen::ArrayXd slack(1);
        slack(0) = std::floor(sl + 0.5) - sl;
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3, slack};
      };
      p.f_star = 0.0;
      p.little_f_star = 0.0;
      p.reference_optimum = {
          {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)}};
      break;
    }
    case 10: {
      p.n_con_u = m;
      p.n_con_l = ql;
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f1 = 0.0;
        for (int i = 0; i < pu; ++i) f1 += sq(xu1(xu)(i) - 2.0);
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - 2.0) -
                sq(xu2(xu)(i) - std::tan(xl2(xl)(i)));
        Eigen::ArrayXd slack(m);
        cubic_slacks(xu, slack, 0);
        return LevelEval{f1 + sum_sq(xl1(xl)) + f3, slack};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - std::tan(xl2(xl)(i)));
        Eigen::ArrayXd slack(ql);
        cubic_slacks(xl1(xl), slack, 0);
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3, slack};
      };
      const double v = 1.0 / std::sqrt(double(m - 1));
      p.f_star = m * sq(v - 2.0);
      p.little_f_star = pu * sq(v);
      Eigen::VectorXd xu_star = Eigen::VectorXd::Constant(m, v);
      Eigen::VectorXd xl_star = Eigen::VectorXd::Zero(n);
      xl_star.tail(r).setConstant(std::atan(v));
      p.reference_optimum = {{xu_star, xl_star}};
      break;
    }
    case 11: {
      p.n_con_u = r;
      p.n_con_l = 1;
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        Eigen::ArrayXd slack(r);
        for (int i = 0; i < r; ++i) {
          const double lg = std::log(xl2(xl)(i));
          f3 += sq(xu2(xu)(i)) - sq(xu2(xu)(i) - lg);
          slack(i) = 1.0 / std::sqrt(double(r)) + lg - xu2(xu)(i);
        }
        return LevelEval{sum_sq(xu1(xu)) - sum_sq(xl1(xl)) + f3, slack};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - std::log(xl2(xl)(i)));
        Eigen::ArrayXd slack(1);
        slack(0) = 1.0 - f3;
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3, slack};
      };
      p.f_star = -1.0;
      p.little_f_star = 1.0;
      Eigen::VectorXd xl_star = Eigen::VectorXd::Zero(n);
      xl_star.tail(r).setConstant(std::exp(-1.0 / std::sqrt(double(r))));
      p.reference_optimum = {{Eigen::VectorXd::Zero(m), xl_star}};
      break;
    }
    case 12: {
      p.n_con_u = r + m;
      p.n_con_l = 1 + ql;
      p.upper_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f1 = 0.0;
        for (int i = 0; i < pu; ++i) f1 += sq(xu1(xu)(i) - 2.0);
        double f3 = 0.0;
        Eigen::ArrayXd slack(r + m);
        for (int i = 0; i < r; ++i) {
          const double tn = std::tan(xl2(xl)(i));
          f3 += sq(xu2(xu)(i) - 2.0) + std::tan(std::abs(xl2(xl)(i))) -
                sq(xu2(xu)(i) - tn);
          slack(i) = tn - xu2(xu)(i);
        }
        cubic_slacks(xu, slack, r);
        return LevelEval{f1 + sum_sq(xl1(xl)) + f3, slack};
      };
      p.lower_fn = [=](const Eigen::VectorXd& xu, const Eigen::VectorXd& xl) {
        double f3 = 0.0;
        for (int i = 0; i < r; ++i)
          f3 += sq(xu2(xu)(i) - std::tan(xl2(xl)(i)));
        Eigen::ArrayXd slack(1 + ql);
        slack(0) = 1.0 - f3;
        cubic_slacks(xl1(xl), slack, 1);
        return LevelEval{sum_sq(xu1(xu)) + sum_sq(xl1(xl)) + f3, slack};
      };
      const double v = 1.0 / std::sqrt(double(m - 1));
      const double rest = 1.0 - (r - 1) * sq(v);
      if (rest < 0.0)
        throw std::invalid_argument("unsupported group split for problem 12");
      const double t = v - std::sqrt(rest);
      p.f_star = m * sq(v - 2.0) + std::abs(t) - 1.0;
      p.little_f_star = pu * sq(v) + 1.0;
      Eigen::VectorXd xu_star = Eigen::VectorXd::Constant(m, v);
      Eigen::VectorXd xl_star = Eigen::VectorXd::Zero(n);
      xl_star(n - r) = std::atan(t);
      p.reference_optimum = {{xu_star, xl_star}};
      break;
    }
    default:
      break;
  }
  return p;
}

}  // namespace drc
