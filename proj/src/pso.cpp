#include <stdexcept>

#include "evaluator.hpp"
#include "tractfit/optimize.hpp"

namespace tractfit {

OptimizationResult pso_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                           const StopCriteria& stop) {
  detail::Evaluator ev(objective, bounds, cfg, stop);
  const auto& s = cfg.pso;
  if (s.particles < 1) throw std::invalid_argument("PSO needs at least one particle");

  const std::size_t dim = bounds.dim();
  const std::size_t n = s.particles;
  CounterRng rng(cfg.seed, hash_string("pso"));

  std::vector<Vector> pos(n, Vector(dim)), vel(n, Vector(dim)), pbest(n);
  std::vector<double> pbest_cost(n);
  pos[0] = ev.initial_point();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double width = bounds.upper[j] - bounds.lower[j];
      if (i > 0) pos[i][j] = rng.uniform(bounds.lower[j], bounds.upper[j]);
      vel[i][j] = rng.uniform(-s.initial_velocity, s.initial_velocity) * width;
    }
  }

  auto costs = ev.evaluate(pos);
  if (costs.size() < n) {
    ev.end_iteration(std::span<const Vector>(pos).first(costs.size()));
    return ev.finish();
  }
  std::size_t gbest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pbest[i] = pos[i];
    pbest_cost[i] = costs[i];
    if (costs[i] < pbest_cost[gbest]) gbest = i;
  }
  if (ev.end_iteration(pos) != StopReason::Continue) return ev.finish();

  while (true) {
    const Vector g = pbest[gbest];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        double v = s.w * vel[i][j] + s.c1 * r1 * (pbest[i][j] - pos[i][j]) + s.c2 * r2 * (g[j] - pos[i][j]);
        double x = pos[i][j] + v;
        if (x < bounds.lower[j]) {
          x = bounds.lower[j];
          v = 0.0;
        } else if (x > bounds.upper[j]) {
          x = bounds.upper[j];
          v = 0.0;
        }
        pos[i][j] = x;
        vel[i][j] = v;
      }
    }
    costs = ev.evaluate(pos);
    for (std::size_t i = 0; i < costs.size(); ++i) {
      if (costs[i] < pbest_cost[i]) {
        pbest_cost[i] = costs[i];
        pbest[i] = pos[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (pbest_cost[i] < pbest_cost[gbest]) gbest = i;
    }
    const bool exhausted = costs.size() < n;
    if (ev.end_iteration(pos) != StopReason::Continue || exhausted) break;
  }
  return ev.finish();
}

}  // namespace tractfit
