#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "evaluator.hpp"
#include "tractfit/optimize.hpp"

namespace tractfit {

std::size_t cmaes_default_lambda(std::size_t dim) {
  return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

CmaesState::CmaesState(const Vector& mean, double sigma, std::size_t lambda)
    : lambda_(lambda), mu_(lambda / 2), sigma_(sigma) {
  const auto n = static_cast<Eigen::Index>(mean.size());
  if (n < 2) throw std::invalid_argument("CMA-ES requires at least two dimensions");
  if (lambda_ < 2) throw std::invalid_argument("CMA-ES population must be >= 2");
  if (!(sigma > 0.0)) throw std::invalid_argument("CMA-ES step size must be positive");
  const double d = static_cast<double>(n);

  weights_.resize(static_cast<Eigen::Index>(mu_));
  for (std::size_t i = 0; i < mu_; ++i) {
    weights_[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(mu_) + 0.5) - std::log(i + 1.0);
  }
  weights_ /= weights_.sum();
  mueff_ = 1.0 / weights_.squaredNorm();

  cc_ = (4.0 + mueff_ / d) / (d + 4.0 + 2.0 * mueff_ / d);
  cs_ = (mueff_ + 2.0) / (d + mueff_ + 5.0);
  c1_ = 2.0 / ((d + 1.3) * (d + 1.3) + mueff_);
  cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((d + 2.0) * (d + 2.0) + mueff_));
  damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (d + 1.0)) - 1.0) + cs_;
  chi_n_ = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

  mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
  pc_ = Eigen::VectorXd::Zero(n);
  ps_ = Eigen::VectorXd::Zero(n);
  cov_ = Eigen::MatrixXd::Identity(n, n);
  basis_ = Eigen::MatrixXd::Identity(n, n);
  scales_ = Eigen::VectorXd::Ones(n);
}

Eigen::VectorXd CmaesState::sample(const Eigen::VectorXd& z) const {
  return mean_ + sigma_ * (basis_ * scales_.cwiseProduct(z));
}

void CmaesState::decompose() {
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  Eigen::VectorXd ev = eig.eigenvalues();
  const double floor = std::max(ev.maxCoeff(), 1e-300) * 1e-14;
  bool clipped = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev[i] > floor)) {
      ev[i] = floor;
      clipped = true;
    }
  }
  basis_ = eig.eigenvectors();
  scales_ = ev.cwiseSqrt();
  if (clipped) {
    cov_ = basis_ * ev.asDiagonal() * basis_.transpose();
    cov_ = 0.5 * (cov_ + cov_.transpose());
  }
}

void CmaesState::tell(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& costs) {
  if (xs.size() != lambda_ || costs.size() != lambda_) throw std::invalid_argument("CMA-ES tell size mismatch");
  std::vector<std::size_t> order(lambda_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return costs[a] < costs[b]; });

  const Eigen::VectorXd old_mean = mean_;
  Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(mean_.size());
  for (std::size_t i = 0; i < mu_; ++i) new_mean += weights_[static_cast<Eigen::Index>(i)] * xs[order[i]];
  mean_ = new_mean;
  const Eigen::VectorXd y_w = (mean_ - old_mean) / sigma_;

  const Eigen::MatrixXd inv_sqrt = basis_ * scales_.cwiseInverse().asDiagonal() * basis_.transpose();
  ps_ = (1.0 - cs_) * ps_ + std::sqrt(cs_ * (2.0 - cs_) * mueff_) * (inv_sqrt * y_w);
  ++generation_;
  const double d = static_cast<double>(mean_.size());
  const double ps_norm = ps_.norm();
  const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs_, 2.0 * generation_)) / chi_n_ < 1.4 + 2.0 / (d + 1.0);
  pc_ = (1.0 - cc_) * pc_ + (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * y_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(mean_.size(), mean_.size());
  for (std::size_t i = 0; i < mu_; ++i) {
    const Eigen::VectorXd y = (xs[order[i]] - old_mean) / sigma_;
    rank_mu += weights_[static_cast<Eigen::Index>(i)] * y * y.transpose();
  }
  const double correction = hsig ? 0.0 : cc_ * (2.0 - cc_);
  cov_ = (1.0 - c1_ - cmu_) * cov_ + c1_ * (pc_ * pc_.transpose() + correction * cov_) + cmu_ * rank_mu;

  sigma_ *= std::exp((cs_ / damps_) * (ps_norm / chi_n_ - 1.0));
  sigma_ = std::min(sigma_, 1e6);
  decompose();
}

OptimizationResult cmaes_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                             const StopCriteria& stop) {
  bounds.validate();
  const std::size_t dim = bounds.dim();
  if (dim < 2) throw std::invalid_argument("CMA-ES does not support single-parameter problems");
  detail::Evaluator ev(objective, bounds, cfg, stop);
  const auto& s = cfg.cmaes;
  const std::size_t lambda = s.lambda > 0 ? s.lambda : cmaes_default_lambda(dim);

  // Step size is relative to the box width; work in unit coordinates.
  Vector width(dim);
  for (std::size_t j = 0; j < dim; ++j) width[j] = bounds.upper[j] - bounds.lower[j];
  auto to_unit = [&](const Vector& x) {
    Vector u(dim);
    for (std::size_t j = 0; j < dim; ++j) u[j] = (x[j] - bounds.lower[j]) / width[j];
    return u;
  };
  auto from_unit = [&](const Eigen::VectorXd& u) {
    Vector x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = std::clamp(bounds.lower[j] + u[static_cast<Eigen::Index>(j)] * width[j], bounds.lower[j], bounds.upper[j]);
    }
    return x;
  };
  auto inside_unit = [&](const Eigen::VectorXd& u) { return (u.array() >= 0.0).all() && (u.array() <= 1.0).all(); };

  const Vector x0 = ev.initial_point();
  if (!ev.evaluate_one(x0)) return ev.finish();
  if (ev.end_iteration(std::span<const Vector>(&x0, 1)) != StopReason::Continue) return ev.finish();

  CmaesState state(to_unit(x0), s.sigma0, lambda);
  CounterRng rng(cfg.seed, hash_string("cmaes"));
  const auto n = static_cast<Eigen::Index>(dim);

  while (true) {
    std::vector<Eigen::VectorXd> us(lambda);
    std::vector<Vector> xs(lambda);
    for (std::size_t k = 0; k < lambda; ++k) {
      Eigen::VectorXd u;
      for (int attempt = 0; attempt < std::max(1, s.max_resamples); ++attempt) {
        Eigen::VectorXd z(n);
        for (Eigen::Index j = 0; j < n; ++j) z[j] = rng.gaussian();
        u = state.sample(z);
        if (inside_unit(u)) break;
      }
      u = u.cwiseMax(0.0).cwiseMin(1.0);
      us[k] = u;
      xs[k] = from_unit(u);
    }
    const auto costs = ev.evaluate(xs);
    if (costs.size() < lambda) {
      ev.end_iteration(xs);
      break;
    }
    state.tell(us, costs);
    if (ev.end_iteration(xs) != StopReason::Continue) break;
  }
  return ev.finish();
}

}  // namespace tractfit
