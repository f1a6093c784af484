#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <drc/spu.hpp>

namespace {

drc::TaskHistory make_history(int id, std::vector<double> fits,
                              std::vector<double> pts = {}) {
  drc::TaskHistory h;
  h.task_id = id;
  h.exec_count = static_cast<int>(fits.size());
  h.fit_series = std::move(fits);
  h.pt_series = std::move(pts);
  return h;
}

}  // namespace

TEST_CASE("competing fitness matches hand-evaluated discount sums") {
  CHECK(drc::competing_fitness(make_history(0, {3.5}), 0.5) == 3.5);
  CHECK(drc::competing_fitness(make_history(0, {-9.25}), 0.0) == -9.25);
  CHECK(drc::competing_fitness(make_history(0, {10.0, 4.0}), 0.5) == 6.0);
  CHECK(drc::competing_fitness(make_history(0, {10.0, 4.0}), 1.0) == 7.0);
  CHECK(drc::competing_fitness(make_history(0, {10.0, 4.0}), 0.0) == 4.0);
  drc::TaskHistory empty;
  CHECK_THROWS_AS(drc::competing_fitness(empty, 0.5), std::invalid_argument);
}

TEST_CASE("zero discount reduces competing fitness to the latest value") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<int> len(1, 9);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> fits(static_cast<std::size_t>(len(rng)));
    for (double& f : fits) f = u(rng);
    CHECK(drc::competing_fitness(make_history(0, fits), 0.0) == fits.back());
  }
}

TEST_CASE("evolving potential matches hand-evaluated cases") {
  drc::GlobalEnvelope env{-5.0, -20.0};
  CHECK(drc::evolving_potential(-4.0, -10.0, env) == 0.8);
  CHECK(drc::evolving_potential(-30.0, -4.0, env) == -7.0);

  drc::GlobalEnvelope wide{10.0, -10.0};
  CHECK(drc::evolving_potential(2.0, 2.0, wide) == 0.0);

  drc::GlobalEnvelope tiny{1e-6, 0.0};
  const double pt = drc::evolving_potential(1e-6, 0.0, tiny);
  CHECK(std::isfinite(pt));
  CHECK(pt > 0.0);
}

TEST_CASE("competing potential matches hand-evaluated cases") {
  CHECK(drc::competing_potential({}, 0.5) == 0.0);
  CHECK(drc::competing_potential({0.45}, 0.5) == 0.45);
  const double cp = drc::competing_potential({0.8, -0.2}, 0.5);
  CHECK(std::abs(cp - 0.2 / 1.5) < 1e-15);
}

TEST_CASE("selection probabilities reproduce the two-task worked example") {
  std::vector<drc::TaskHistory> active{make_history(7, {4.0}),
                                       make_history(9, {2.0})};
  drc::ProbabilityVector p = drc::selection_probabilities(active, {});
  REQUIRE(p.size() == 2);
  CHECK(std::abs(p.at(7) - 0.85) < 1e-12);
  CHECK(std::abs(p.at(9) - 0.15) < 1e-12);
}

TEST_CASE("selection probabilities handle degenerate inputs") {
  std::vector<drc::TaskHistory> solo{make_history(3, {-12.0})};
  drc::ProbabilityVector p1 = drc::selection_probabilities(solo, {});
  REQUIRE(p1.size() == 1);
  CHECK(p1.at(3) == 1.0);

  std::vector<drc::TaskHistory> equal{make_history(0, {5.0}),
                                      make_history(1, {5.0}),
                                      make_history(2, {5.0})};
  drc::ProbabilityVector p2 = drc::selection_probabilities(equal, {});
  for (const auto& [id, prob] : p2) CHECK(std::abs(prob - 1.0 / 3.0) < 1e-12);

  CHECK_THROWS_AS(drc::selection_probabilities({}, {}), std::invalid_argument);

  drc::TaskHistory bad = make_history(0, {1.0, 2.0});
  std::vector<drc::TaskHistory> bad_list{bad};
  CHECK_THROWS_AS(drc::selection_probabilities(bad_list, {}),
                  std::invalid_argument);
}

TEST_CASE("selection probabilities reject invalid configs") {
  std::vector<drc::TaskHistory> active{make_history(0, {1.0})};
  drc::SpuConfig cfg;
  cfg.w_bs = 0.2;
  CHECK_THROWS_AS(drc::selection_probabilities(active, cfg),
                  std::invalid_argument);
  cfg = {};
  cfg.epsilon = 1.0;
  CHECK_THROWS_AS(drc::selection_probabilities(active, cfg),
                  std::invalid_argument);
  cfg = {};
  cfg.gamma = 1.2;
  CHECK_THROWS_AS(drc::selection_probabilities(active, cfg),
                  std::invalid_argument);
}

TEST_CASE("selection probabilities always form a simplex") {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> fit(-100.0, 100.0);
  std::uniform_real_distribution<double> pot(-20.0, 20.0);
  std::uniform_int_distribution<int> ksize(1, 12);
  std::uniform_int_distribution<int> hlen(1, 6);
  for (int rep = 0; rep < 300; ++rep) {
    const int k = ksize(rng);
    std::vector<drc::TaskHistory> active;
    for (int i = 0; i < k; ++i) {
      const int t = hlen(rng);
      std::vector<double> fits(static_cast<std::size_t>(t));
      for (double& f : fits) f = fit(rng);
      std::vector<double> pts(static_cast<std::size_t>(t - 1));
      for (double& q : pts) q = pot(rng);
      active.push_back(make_history(i, fits, pts));
    }
    drc::ProbabilityVector p = drc::selection_probabilities(active, {});
    REQUIRE(p.size() == static_cast<std::size_t>(k));
    double sum = 0.0;
    for (const auto& [id, prob] : p) {
      CHECK(prob >= 0.0);
      CHECK(id >= 0);
      CHECK(id < k);
      sum += prob;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("raising a task's latest fitness never lowers its fitness share") {
  drc::SpuConfig pf_only;
  pf_only.w_bs = 0.0;
  pf_only.w_pf = 1.0;
  pf_only.w_pt = 0.0;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> fit(-40.0, 40.0);
  std::uniform_real_distribution<double> bump(0.1, 30.0);
  std::uniform_int_distribution<int> ksize(2, 9);
  std::uniform_int_distribution<int> hlen(1, 5);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = ksize(rng);
    std::vector<drc::TaskHistory> active;
    for (int i = 0; i < k; ++i) {
      const int t = hlen(rng);
      std::vector<double> fits(static_cast<std::size_t>(t));
      for (double& f : fits) f = fit(rng);
      active.push_back(
          make_history(i, fits,
                       std::vector<double>(static_cast<std::size_t>(t - 1))));
    }
    const int j = std::uniform_int_distribution<int>(0, k - 1)(rng);
    const double before =
        drc::selection_probabilities(active, pf_only).at(j);
    active[static_cast<std::size_t>(j)].fit_series.back() += bump(rng);
    const double after =
        drc::selection_probabilities(active, pf_only).at(j);
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("fitness shares are invariant to a constant fitness shift") {
  drc::SpuConfig pf_only;
  pf_only.w_bs = 0.0;
  pf_only.w_pf = 1.0;
  pf_only.w_pt = 0.0;
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> fit(-30.0, 30.0);
  std::uniform_real_distribution<double> shift(-500.0, 500.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<drc::TaskHistory> active;
    for (int i = 0; i < 5; ++i) {
      std::vector<double> fits{fit(rng), fit(rng), fit(rng)};
      active.push_back(make_history(i, fits, {0.0, 0.0}));
    }
    drc::ProbabilityVector base =
        drc::selection_probabilities(active, pf_only);
    const double c = shift(rng);
    for (drc::TaskHistory& h : active)
      for (double& f : h.fit_series) f += c;
    drc::ProbabilityVector moved =
        drc::selection_probabilities(active, pf_only);
    for (const auto& [id, prob] : base)
      CHECK(std::abs(moved.at(id) - prob) < 1e-9);
  }
}

TEST_CASE("a dominant competing potential captures the potential share") {
  drc::SpuConfig pt_only;
  pt_only.w_bs = 0.0;
  pt_only.w_pf = 0.0;
  pt_only.w_pt = 1.0;
  std::vector<drc::TaskHistory> active{
      make_history(0, {1.0, 1.0}, {100.0}),
      make_history(1, {1.0, 1.0}, {0.0}),
      make_history(2, {1.0, 1.0}, {0.0})};
  drc::ProbabilityVector p = drc::selection_probabilities(active, pt_only);
  CHECK(p.at(0) > 0.999);

  std::vector<drc::TaskHistory> extreme{
      make_history(0, {1.0, 1.0}, {1e9}),
      make_history(1, {1.0, 1.0}, {1e9})};
  drc::ProbabilityVector q = drc::selection_probabilities(extreme, pt_only);
  CHECK(std::isfinite(q.at(0)));
  CHECK(std::abs(q.at(0) - 0.5) < 1e-12);
  CHECK(std::abs(q.at(0) + q.at(1) - 1.0) < 1e-12);
}
