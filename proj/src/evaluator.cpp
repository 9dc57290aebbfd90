#include "evaluator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tractfit/parallel.hpp"

namespace tractfit::detail {

Evaluator::Evaluator(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                     const StopCriteria& stop)
    : objective_(objective), bounds_(bounds), cfg_(cfg), stop_(stop), start_(std::chrono::steady_clock::now()) {
  bounds_.validate();
  stop_.validate();
  if (!objective_.cost && !objective_.residual) throw std::invalid_argument("objective has no cost function");
}

Vector Evaluator::initial_point() const {
  if (cfg_.initial) {
    if (cfg_.initial->size() != bounds_.dim()) throw std::invalid_argument("initial point has wrong dimension");
    if (!bounds_.contains(*cfg_.initial)) throw std::invalid_argument("initial point outside bounds");
    return *cfg_.initial;
  }
  CounterRng rng(cfg_.seed, hash_string("initial"));
  Vector x(bounds_.dim());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(bounds_.lower[i], bounds_.upper[i]);
  return x;
}

void Evaluator::check_feasible(const Vector& x) const {
  if (x.size() != bounds_.dim() || !bounds_.contains(x)) {
    throw std::logic_error("optimizer proposed a point outside the bounds");
  }
}

void Evaluator::record(const Vector& x, double cost) {
  if (std::isnan(cost)) throw std::runtime_error("objective returned NaN");
  if (!have_best_ || cost < best_cost_) {
    best_cost_ = cost;
    best_x_ = x;
    have_best_ = true;
  }
}

std::vector<double> Evaluator::evaluate(std::span<const Vector> candidates) {
  const std::size_t n = std::min(candidates.size(), remaining());
  for (std::size_t i = 0; i < n; ++i) check_feasible(candidates[i]);
  std::vector<double> costs(n);
  parallel_for(n, cfg_.threads, [&](std::size_t i) { costs[i] = objective_(candidates[i]); });
  n_evals_ += n;
  for (std::size_t i = 0; i < n; ++i) record(candidates[i], costs[i]);
  return costs;
}

std::optional<double> Evaluator::evaluate_one(const Vector& x) {
  auto c = evaluate(std::span<const Vector>(&x, 1));
  if (c.empty()) return std::nullopt;
  return c.front();
}

std::optional<Evaluator::ResidualEval> Evaluator::evaluate_residual(const Vector& x) {
  if (remaining() == 0) return std::nullopt;
  check_feasible(x);
  ResidualEval out;
  if (objective_.has_residual()) {
    out.residual = objective_.residual(x);
    if (residual_size_ == 0) residual_size_ = out.residual.size();
    if (out.residual.size() != residual_size_) {
      throw std::runtime_error("residual length changed between calls: " + std::to_string(residual_size_) +
                               " vs " + std::to_string(out.residual.size()));
    }
    double s = 0.0;
    for (double r : out.residual) s += std::abs(r);
    out.cost = out.residual.empty() ? 0.0 : s / static_cast<double>(out.residual.size());
  } else {
    // Scalar cost f >= 0 seen as a single residual sqrt(f).
    out.cost = objective_.cost(x);
    out.residual = {std::sqrt(std::max(out.cost, 0.0))};
  }
  ++n_evals_;
  record(x, out.cost);
  return out;
}

StopReason Evaluator::end_iteration(std::span<const Vector> working_set) {
  history_.push_back(best_cost_);
  if (cfg_.observer) cfg_.observer(iteration_, working_set);
  ++iteration_;
  reason_ = check_stop(history_, n_evals_, stop_);
  return reason_;
}

OptimizationResult Evaluator::finish() const {
  OptimizationResult r;
  r.best_x = best_x_;
  r.best_cost = best_cost_;
  r.n_evals = n_evals_;
  r.n_iterations = history_.empty() ? 0 : history_.size() - 1;
  r.history = history_;
  r.stop_reason = reason_ == StopReason::Continue ? StopReason::Budget : reason_;
  r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return r;
}

}  // namespace tractfit::detail
