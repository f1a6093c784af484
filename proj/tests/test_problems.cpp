#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "drc/problem.hpp"
#include "drc/registry.hpp"
#include "drc/rng.hpp"

using namespace drc;

TEST_CASE("synthetic quadratic has the stated closed form") {
  Eigen::VectorXd a(2);
  a << 1.0, 1.0;
  BilevelProblem p = make_synthetic_quadratic(2, a);
  EvalCounter c;

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  LowerEval lo = evaluate_lower(p, zero, zero, c);
  CHECK(lo.value == 0.0);
  CHECK(lo.cv == 0.0);

  UpperEval up = evaluate_upper(p, a, a, c);
  CHECK(up.value == 0.0);

  up = evaluate_upper(p, zero, zero, c);
  CHECK(up.value == Catch::Approx(2.0));
  CHECK(c.fes_u == 2);
  CHECK(c.fes_l == 1);

  CHECK_THROWS_AS(
      make_synthetic_quadratic(2, Eigen::VectorXd::Constant(2, 11.0)),
      std::invalid_argument);
  CHECK_THROWS_AS(make_synthetic_quadratic(2, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("upper cv sums violations from both levels") {
  BilevelProblem p;
  p.name = "toy";
  p.dim_u = 1;
  p.dim_l = 1;
  p.bounds_u = uniform_box(1, -1.0, 1.0);
  p.bounds_l = uniform_box(1, -1.0, 1.0);
  p.n_con_u = 2;
  p.n_con_l = 1;
  p.upper_fn = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    Eigen::ArrayXd s(2);
    s << 0.3, -5.0;  // one violated, one satisfied
    return LevelEval{1.0, s};
  };
  p.lower_fn = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    Eigen::ArrayXd s(1);
    s << 0.2;
    return LevelEval{2.0, s};
  };
  EvalCounter c;
  Eigen::VectorXd x(1);
  x << 0.0;
  UpperEval up = evaluate_upper(p, x, x, c);
  CHECK(up.cv == Catch::Approx(0.5));
  LowerEval lo = evaluate_lower(p, x, x, c);
  CHECK(lo.cv == Catch::Approx(0.2));
  CHECK(c.fes_u == 1);
  CHECK(c.fes_l == 1);
}

TEST_CASE("evaluation counters advance once per objective call") {
  BilevelProblem p = make_synthetic_quadratic(3, Eigen::VectorXd::Zero(3));
  long long raw_u = 0, raw_l = 0;
  LevelFn inner_u = p.upper_fn, inner_l = p.lower_fn;
  p.upper_fn = [&raw_u, inner_u](const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b) {
    ++raw_u;
    return inner_u(a, b);
  };
  p.lower_fn = [&raw_l, inner_l](const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b) {
    ++raw_l;
    return inner_l(a, b);
  };
  EvalCounter c;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 5; ++i) evaluate_upper(p, x, x, c);
  for (int i = 0; i < 9; ++i) evaluate_lower(p, x, x, c);
  CHECK(c.fes_u == 5);
  CHECK(c.fes_l == 9);
  CHECK(raw_u == 5);
  CHECK(raw_l == 9);  // unconstrained: upper calls do not touch the lower fn
}

TEST_CASE("constrained preference follows the three rules") {
  CHECK(deb_compare(5.0, 0.0, 1.0, 0.1) == -1);
  CHECK(deb_compare(1.0, 0.0, 2.0, 0.0) == -1);
  CHECK(deb_compare(9.0, 0.2, 1.0, 0.5) == -1);
  CHECK(deb_compare(1.0, 0.0, 1.0, 0.0) == 0);
  CHECK(deb_compare(3.0, 0.4, 7.0, 0.4) == 0);
  CHECK_THROWS_AS(deb_compare(std::nan(""), 0.0, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("constrained preference is transitive on random pools") {
  RngStream rng(17);
  std::vector<std::pair<double, double>> pool;
  for (int i = 0; i < 50; ++i) {
    double cv = rng.unit() < 0.4 ? 0.0 : rng.uniform(0.0, 2.0);
    pool.push_back({rng.uniform(-5.0, 5.0), cv});
  }
  auto leq = [&](int i, int j) {
    return deb_compare(pool[std::size_t(i)].first, pool[std::size_t(i)].second,
                       pool[std::size_t(j)].first,
                       pool[std::size_t(j)].second) <= 0;
  };
  for (int a = 0; a < 50; ++a)
    for (int b = 0; b < 50; ++b)
      for (int c = 0; c < 50; ++c)
        if (leq(a, b) && leq(b, c)) REQUIRE(leq(a, c));
}

TEST_CASE("analytic lower response dominates random lower points") {
  BilevelProblem p = make_synthetic_quadratic(3, Eigen::VectorXd::Ones(3));
  RngStream rng(23);
  EvalCounter c;
  Eigen::VectorXd xu(3);
  for (int i = 0; i < 3; ++i) xu(i) = rng.uniform(-5.0, 10.0);
  LowerEval best = evaluate_lower(p, xu, xu, c);
  for (int k = 0; k < 1000; ++k) {
    Eigen::VectorXd xl(3);
    for (int i = 0; i < 3; ++i) xl(i) = rng.uniform(-5.0, 10.0);
    LowerEval other = evaluate_lower(p, xu, xl, c);
    REQUIRE(deb_compare(best, other) <= 0);
  }
}

TEST_CASE("problem registry resolves ids and validates dims") {
  BilevelProblem p1 = make_problem("smd1");
  CHECK(p1.dim_u == 2);
  CHECK(p1.dim_l == 3);
  BilevelProblem p2 = make_problem("smd4", 10, 10);
  CHECK(p2.dim_u == 10);
  BilevelProblem q = make_problem("synthq-5");
  CHECK(q.dim_u == 5);
  CHECK(q.dim_l == 5);
  CHECK_THROWS_AS(make_problem("smd13"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem("smd0"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem("synthq-0"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem("synthq-5", 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_problem("nope"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem("smdx"), std::invalid_argument);
}
