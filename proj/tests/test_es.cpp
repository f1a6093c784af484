#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "drc/es.hpp"

using namespace drc;

namespace {

// Run the engine on |x|^2 and return the best-so-far trajectory (one entry
// per generation).
std::vector<double> run_sphere(int dim, int generations, std::uint64_t seed) {
  RngStream rng(seed);
  EsState s = init_es(dim, Eigen::VectorXd::Constant(dim, 3.0), 2.0,
                      Eigen::MatrixXd::Identity(dim, dim));
  std::vector<double> best;
  double best_so_far = std::numeric_limits<double>::infinity();
  for (int g = 0; g < generations; ++g) {
    auto xs = sample(s, s.lambda, rng);
    std::vector<Candidate> cands;
    for (auto& x : xs) cands.push_back({x, x.squaredNorm(), 0.0});
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) {
                return a.objective < b.objective;
              });
    best_so_far = std::min(best_so_far, cands.front().objective);
    update(s, cands);
    best.push_back(best_so_far);
  }
  return best;
}

}  // namespace

TEST_CASE("fresh state starts at generation zero with zero paths") {
  EsState s = init_es(2, Eigen::VectorXd::Zero(2), 0.5,
                      Eigen::MatrixXd::Identity(2, 2));
  CHECK(s.generation == 0);
  CHECK(s.path_sigma.isZero());
  CHECK(s.path_c.isZero());
  REQUIRE(s.mean_history.size() == 1);
  CHECK(s.mean_history[0] == s.mean);
}

TEST_CASE("init rejects dimension mismatches") {
  CHECK_THROWS_AS(init_es(3, Eigen::VectorXd::Zero(2), 0.5,
                          Eigen::MatrixXd::Identity(3, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(init_es(2, Eigen::VectorXd::Zero(2), 0.5,
                          Eigen::MatrixXd::Identity(3, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(init_es(2, Eigen::VectorXd::Zero(2), -1.0,
                          Eigen::MatrixXd::Identity(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("anisotropic init is readable back through marginal") {
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(2, 2);
  c0(0, 0) = 1.0;
  c0(1, 1) = 4.0;
  EsState s = init_es(2, Eigen::VectorXd::Zero(2), 0.5, c0);
  Eigen::VectorXd m;
  Eigen::MatrixXd c;
  double sig;
  marginal(s, {1}, m, c, sig);
  CHECK(c(0, 0) == Catch::Approx(4.0));
  CHECK(sig == Catch::Approx(0.5));
}

TEST_CASE("sampling zero candidates yields an empty list") {
  EsState s = init_es(2, Eigen::VectorXd::Zero(2), 0.5,
                      Eigen::MatrixXd::Identity(2, 2));
  RngStream rng(1);
  CHECK(sample(s, 0, rng).empty());
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  EsState s = init_es(4, Eigen::VectorXd::Zero(4), 0.7,
                      Eigen::MatrixXd::Identity(4, 4));
  RngStream a(42), b(42);
  auto xs = sample(s, 7, a);
  auto ys = sample(s, 7, b);
  REQUIRE(xs.size() == ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(xs[i] == ys[i]);
}

TEST_CASE("sample moments match the target Gaussian") {
  const int dim = 3, count = 100000;
  EsState s = init_es(dim, Eigen::VectorXd::Zero(dim), 1.0,
                      Eigen::MatrixXd::Identity(dim, dim));
  RngStream rng(7);
  auto xs = sample(s, count, rng);
  for (int d = 0; d < dim; ++d) {
    double mean = 0.0, var = 0.0;
    for (const auto& x : xs) mean += x(d);
    mean /= count;
    for (const auto& x : xs) var += (x(d) - mean) * (x(d) - mean);
    var /= count - 1;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(double(count)));
    CHECK(var == Catch::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("update keeps the mean fixed when all candidates sit on it") {
  EsState s = init_es(3, Eigen::VectorXd::Constant(3, 1.5), 0.5,
                      Eigen::MatrixXd::Identity(3, 3));
  std::vector<Candidate> cands(std::size_t(s.lambda));
  for (auto& c : cands) c = {s.mean, 0.0, 0.0};
  Eigen::VectorXd before = s.mean;
  update(s, cands);
  CHECK(s.mean.isApprox(before));
  CHECK(s.generation == 1);
  CHECK(s.mean_history.size() == 2);
  CHECK_THROWS_AS(update(s, {}), std::invalid_argument);
}

TEST_CASE("sphere objective is driven below 1e-8 within 5000 evaluations") {
  const int dim = 5;
  EsState probe = init_es(dim, Eigen::VectorXd::Zero(dim), 1.0,
                          Eigen::MatrixXd::Identity(dim, dim));
  const int gens = 5000 / probe.lambda;
  auto best = run_sphere(dim, gens, 123);
  for (std::size_t i = 1; i < best.size(); ++i) CHECK(best[i] <= best[i - 1]);
  CHECK(best.back() < 1e-8);
}

TEST_CASE("best-so-far is monotone on spheres of several dimensions") {
  for (int dim : {2, 3, 7, 10}) {
    auto best = run_sphere(dim, 60, 1000 + std::uint64_t(dim));
    for (std::size_t i = 1; i < best.size(); ++i)
      REQUIRE(best[i] <= best[i - 1]);
  }
}

TEST_CASE("covariance stays symmetric and positive after updates") {
  const int dim = 4;
  RngStream rng(99);
  EsState s = init_es(dim, Eigen::VectorXd::Zero(dim), 1.0,
                      Eigen::MatrixXd::Identity(dim, dim));
  for (int g = 0; g < 50; ++g) {
    auto xs = sample(s, s.lambda, rng);
    std::vector<Candidate> cands;
    for (auto& x : xs) cands.push_back({x, (x.array() - 1.0).square().sum(), 0.0});
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) {
                return a.objective < b.objective;
              });
    update(s, cands);
    CHECK((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.cov);
    CHECK(eig.eigenvalues().minCoeff() >= 1e-14 * s.cov.trace() * 0.999);
    REQUIRE(s.mean_history.size() <= 3);
    CHECK(s.mean_history.back() == s.mean);
  }
}

TEST_CASE("fixed-seed generation loops are exactly reproducible") {
  auto a = run_sphere(3, 40, 5);
  auto b = run_sphere(3, 40, 5);
  CHECK(a == b);
}

TEST_CASE("marginal restricts mean and covariance to the index set") {
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(3, 3);
  c0.diagonal() << 1.0, 4.0, 9.0;
  Eigen::VectorXd m0(3);
  m0 << 1.0, 2.0, 3.0;
  EsState s = init_es(3, m0, 0.5, c0);

  Eigen::VectorXd m;
  Eigen::MatrixXd c;
  double sig;
  marginal(s, {0, 1, 2}, m, c, sig);
  CHECK(m.isApprox(m0));
  CHECK(c.isApprox(s.cov));
  CHECK(sig == s.sigma);

  marginal(s, {1, 2}, m, c, sig);
  CHECK(m(0) == 2.0);
  CHECK(m(1) == 3.0);
  CHECK(c(0, 0) == Catch::Approx(4.0));
  CHECK(c(1, 1) == Catch::Approx(9.0));
  CHECK(c(0, 1) == Catch::Approx(0.0));

  CHECK_THROWS_AS(marginal(s, {0, 3}, m, c, sig), std::out_of_range);
  CHECK_THROWS_AS(marginal(s, {1, 1}, m, c, sig), std::invalid_argument);
}

TEST_CASE("marginal composes: restricting twice equals restricting once") {
  RngStream rng(11);
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(
      5, 5, [&]() { return rng.normal(); });
  Eigen::MatrixXd spd = a * a.transpose() + Eigen::MatrixXd::Identity(5, 5);
  Eigen::VectorXd m0 = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  EsState s = init_es(5, m0, 1.0, spd);

  // First restrict to {1,2,4}, then take {0,2} of the result; that equals
  // restricting the original to {1,4}.
  Eigen::VectorXd m1, m2;
  Eigen::MatrixXd c1, c2;
  double sig;
  marginal(s, {1, 2, 4}, m1, c1, sig);
  EsState sub = init_es(3, m1, s.sigma, c1);
  marginal(sub, {0, 2}, m1, c1, sig);
  marginal(s, {1, 4}, m2, c2, sig);
  CHECK(m1.isApprox(m2));
  CHECK(c1.isApprox(c2, 1e-9));

  // Principal sub-blocks of an SPD matrix stay SPD.
  for (auto coords : std::vector<std::vector<int>>{{0}, {1, 3}, {0, 2, 4}}) {
    Eigen::VectorXd mm;
    Eigen::MatrixXd cc;
    marginal(s, coords, mm, cc, sig);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cc);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("box sampling keeps every vector inside the box") {
  const int dim = 3;
  EsState s = init_es(dim, Eigen::VectorXd::Constant(dim, 9.5), 2.0,
                      Eigen::MatrixXd::Identity(dim, dim));
  Box box;
  box.lb = Eigen::ArrayXd::Constant(dim, -5.0);
  box.ub = Eigen::ArrayXd::Constant(dim, 10.0);
  RngStream rng(3);
  for (const auto& x : sample_in_box(s, 200, box, rng)) {
    CHECK((x.array() >= box.lb).all());
    CHECK((x.array() <= box.ub).all());
  }
}
