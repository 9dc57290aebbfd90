#pragma once

// Shared bookkeeping for every optimizer: budgeted (optionally parallel)
// evaluation, best-so-far tracking, per-iteration history and the stop rule.

#include <chrono>
#include <span>
#include <vector>

#include "tractfit/optimize.hpp"
#include "tractfit/rng.hpp"

namespace tractfit::detail {

class Evaluator {
 public:
  Evaluator(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
            const StopCriteria& stop);

  // Evaluates as many candidates (in order) as the budget allows and returns
  // their costs; a shorter result means the budget ran out.
  std::vector<double> evaluate(std::span<const Vector> candidates);
  std::optional<double> evaluate_one(const Vector& x);

  // Residual evaluation for least-squares methods; also counted and tracked.
  struct ResidualEval {
    Vector residual;
    double cost;
  };
  std::optional<ResidualEval> evaluate_residual(const Vector& x);

  // Closes an iteration: appends the best cost to the history, notifies the
  // observer and returns the stop decision.
  StopReason end_iteration(std::span<const Vector> working_set);

  std::size_t remaining() const { return stop_.max_evals - n_evals_; }
  double best_cost() const { return best_cost_; }
  const Vector& best_x() const { return best_x_; }
  StopReason reason() const { return reason_; }

  OptimizationResult finish() const;

  // Start point: cfg.initial (validated) or a uniform draw from the seed.
  Vector initial_point() const;

 private:
  void check_feasible(const Vector& x) const;
  void record(const Vector& x, double cost);

  const Objective& objective_;
  const Bounds& bounds_;
  const OptimizerConfig& cfg_;
  const StopCriteria& stop_;
  std::chrono::steady_clock::time_point start_;
  std::size_t n_evals_ = 0;
  std::size_t iteration_ = 0;
  std::size_t residual_size_ = 0;
  bool have_best_ = false;
  Vector best_x_;
  double best_cost_ = 0.0;
  std::vector<double> history_;
  StopReason reason_ = StopReason::Continue;
};

}  // namespace tractfit::detail
