#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "drc/rng.hpp"

namespace drc {

/// One sampled individual together with its evaluation, ready for ranking.
struct Candidate {
  Eigen::VectorXd vector;
  double objective = 0.0;
  double cv = 0.0;
};

/// Axis-aligned box; lb(i) < ub(i) per coordinate.
struct Box {
  Eigen::ArrayXd lb;
  Eigen::ArrayXd ub;

  int dim() const { return static_cast<int>(lb.size()); }
};

/// Covariance-matrix-adaptation evolution strategy state. Strategy constants
/// are fixed at init from (dim, lambda) using the standard default settings.
struct EsState {
  int dim = 0;
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;  // recombination weights over the mu parents
  double mu_eff = 0.0;
  double c_sigma = 0.0, d_sigma = 0.0;
  double c_c = 0.0, c_1 = 0.0, c_mu = 0.0;
  double chi_n = 0.0;

  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd cov;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  long long generation = 0;
  std::vector<Eigen::VectorXd> mean_history;  // at most 3, newest last

  // Cached eigendecomposition of cov (cov = B * diag(d_sqrt^2) * B^T).
  Eigen::MatrixXd eig_b;
  Eigen::VectorXd eig_d_sqrt;
};

inline int default_lambda(int dim) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(double(dim))));
}

namespace detail {

/// Symmetrize and clamp eigenvalues at 1e-14 * trace; refresh the cached
/// decomposition. Throws if the matrix is not finite.
inline void repair_cov(EsState& s) {
  if (!s.cov.allFinite()) throw std::runtime_error("covariance is not finite");
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  const double tr = s.cov.trace();
  const double floor_ev = 1e-14 * std::max(tr, 1e-300);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.cov);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd evals = eig.eigenvalues();
  bool clamped = false;
  for (int i = 0; i < s.dim; ++i) {
    if (evals(i) < floor_ev) {
      evals(i) = floor_ev;
      clamped = true;
    }
  }
  s.eig_b = eig.eigenvectors();
  s.eig_d_sqrt = evals.cwiseSqrt();
  if (clamped)
    s.cov = s.eig_b * evals.asDiagonal() * s.eig_b.transpose();
}

inline void push_mean_history(EsState& s) {
  s.mean_history.push_back(s.mean);
  if (s.mean_history.size() > 3)
    s.mean_history.erase(s.mean_history.begin());
}

}  // namespace detail

/// Fresh strategy state with standard default constants for the given
/// offspring count (lambda defaults to 4 + floor(3 ln dim)).
inline EsState init_es(int dim, const Eigen::VectorXd& mean0, double sigma0,
                       const Eigen::MatrixXd& cov0, int lambda = 0) {
  if (dim < 1) throw std::invalid_argument("dim must be positive");
  if (mean0.size() != dim) throw std::invalid_argument("mean0 size mismatch");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("sigma0 must be positive");
  if (cov0.rows() != dim || cov0.cols() != dim)
    throw std::invalid_argument("cov0 shape mismatch");
  if (!mean0.allFinite() || !cov0.allFinite())
    throw std::invalid_argument("non-finite initial parameters");
  if (lambda == 0) lambda = default_lambda(dim);
  if (lambda < 2) throw std::invalid_argument("lambda must be at least 2");

  EsState s;
  s.dim = dim;
  s.lambda = lambda;
  s.mu = lambda / 2;
  s.weights = Eigen::VectorXd(s.mu);
  for (int i = 0; i < s.mu; ++i)
    s.weights(i) = std::log((lambda + 1) / 2.0) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  const double n = double(dim);
  s.c_sigma = (s.mu_eff + 2.0) / (n + s.mu_eff + 5.0);
  s.d_sigma = 1.0 +
              2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (n + 1.0)) - 1.0) +
              s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / n) / (n + 4.0 + 2.0 * s.mu_eff / n);
  s.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c_1, 2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) /
                                     ((n + 2.0) * (n + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  s.mean = mean0;
  s.sigma = sigma0;
  s.cov = cov0;
  s.path_sigma = Eigen::VectorXd::Zero(dim);
  s.path_c = Eigen::VectorXd::Zero(dim);
  s.generation = 0;
  detail::repair_cov(s);
  s.mean_history.clear();
  s.mean_history.push_back(mean0);
  return s;
}

/// Draw `count` vectors from N(mean, sigma^2 * cov) using the cached
/// decomposition; deterministic per stream state.
inline std::vector<Eigen::VectorXd> sample(const EsState& s, int count,
                                           RngStream& rng) {
  if (count < 0) throw std::invalid_argument("count must be non-negative");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd z(s.dim);
    for (int i = 0; i < s.dim; ++i) z(i) = normal(rng.gen());
    out.push_back(s.mean + s.sigma * (s.eig_b * (s.eig_d_sqrt.array() *
                                                 z.array()).matrix()));
  }
  return out;
}

/// As sample(), but each vector is resampled up to 10 times to land inside
/// the box and clamped afterwards. Evaluated vectors therefore always lie in
/// the box and FE accounting stays exact.
inline std::vector<Eigen::VectorXd> sample_in_box(const EsState& s, int count,
                                                  const Box& box,
                                                  RngStream& rng) {
  if (box.dim() != s.dim) throw std::invalid_argument("box dim mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd x(s.dim);
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::VectorXd z(s.dim);
      for (int i = 0; i < s.dim; ++i) z(i) = normal(rng.gen());
      x = s.mean + s.sigma * (s.eig_b * (s.eig_d_sqrt.array() *
                                         z.array()).matrix());
      if ((x.array() >= box.lb).all() && (x.array() <= box.ub).all()) break;
    }
    x = x.array().max(box.lb).min(box.ub).matrix();
    out.push_back(std::move(x));
  }
  return out;
}

/// One generation step from a best-first ranked candidate list: weighted
/// recombination of the top mu, cumulative step-size adaptation, rank-one
/// plus rank-mu covariance update.
inline void update(EsState& s, const std::vector<Candidate>& ranked) {
  if (ranked.empty()) throw std::invalid_argument("ranked set is empty");
  const int k = std::min<int>(s.mu, static_cast<int>(ranked.size()));
  Eigen::VectorXd w = s.weights.head(k);
  w /= w.sum();
  for (const auto& c : ranked)
    if (c.vector.size() != s.dim)
      throw std::invalid_argument("candidate dim mismatch");

  const Eigen::VectorXd mean_old = s.mean;
  Eigen::VectorXd mean_new = Eigen::VectorXd::Zero(s.dim);
  for (int i = 0; i < k; ++i) mean_new += w(i) * ranked[std::size_t(i)].vector;
  const Eigen::VectorXd y_w = (mean_new - mean_old) / s.sigma;

  // C^{-1/2} * y_w via the cached decomposition.
  Eigen::VectorXd inv_sqrt_y =
      s.eig_b * ((s.eig_b.transpose() * y_w).array() / s.eig_d_sqrt.array())
                    .matrix();

  s.path_sigma = (1.0 - s.c_sigma) * s.path_sigma +
                 std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) *
                     inv_sqrt_y;
  const double ps_norm = s.path_sigma.norm();
  const double gen1 = double(s.generation + 1);
  const double denom =
      std::sqrt(1.0 - std::pow(1.0 - s.c_sigma, 2.0 * gen1));
  const bool h_sigma =
      ps_norm / denom < (1.4 + 2.0 / (s.dim + 1.0)) * s.chi_n;

  s.path_c = (1.0 - s.c_c) * s.path_c +
             (h_sigma ? std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) : 0.0) *
                 y_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(s.dim, s.dim);
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd y =
        (ranked[std::size_t(i)].vector - mean_old) / s.sigma;
    rank_mu.noalias() += w(i) * y * y.transpose();
  }
  const double delta_h = (h_sigma ? 0.0 : 1.0) * s.c_c * (2.0 - s.c_c);
  s.cov = (1.0 - s.c_1 - s.c_mu) * s.cov +
          s.c_1 * (s.path_c * s.path_c.transpose() + delta_h * s.cov) +
          s.c_mu * rank_mu;

  const double expo =
      std::min(1.0, (s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));
  s.sigma *= std::exp(expo);
  if (!(s.sigma > 0.0) || !std::isfinite(s.sigma))
    throw std::runtime_error("step size degenerated");

  s.mean = mean_new;
  detail::repair_cov(s);
  s.generation += 1;
  detail::push_mean_history(s);
}

/// Restriction of the search distribution to a coordinate subset.
/// `coords` holds 0-based strictly increasing indices.
inline void marginal(const EsState& s, const std::vector<int>& coords,
                     Eigen::VectorXd& mean_out, Eigen::MatrixXd& cov_out,
                     double& sigma_out) {
  if (coords.empty()) throw std::invalid_argument("coords is empty");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= s.dim)
      throw std::out_of_range("coordinate index out of range");
    if (i > 0 && coords[i] <= coords[i - 1])
      throw std::invalid_argument("coords must be strictly increasing");
  }
  const int d = static_cast<int>(coords.size());
  mean_out.resize(d);
  cov_out.resize(d, d);
  for (int i = 0; i < d; ++i) {
    mean_out(i) = s.mean(coords[std::size_t(i)]);
    for (int j = 0; j < d; ++j)
      cov_out(i, j) = s.cov(coords[std::size_t(i)], coords[std::size_t(j)]);
  }
  sigma_out = s.sigma;
}

}  // namespace drc
