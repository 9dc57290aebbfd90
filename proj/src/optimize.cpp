#include "tractfit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tractfit {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::GA: return "ga";
    case Method::PSO: return "pso";
    case Method::CMAES: return "cmaes";
    case Method::NM: return "nm";
    case Method::TRF: return "trf";
  }
  return "?";
}

std::optional<Method> method_from_string(std::string_view name) {
  for (auto m : {Method::GA, Method::PSO, Method::CMAES, Method::NM, Method::TRF}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Continue: return "continue";
    case StopReason::Target: return "target";
    case StopReason::Stalled: return "stalled";
    case StopReason::Budget: return "budget";
  }
  return "?";
}

Bounds Bounds::unit(std::size_t dim) { return Bounds{Vector(dim, 0.0), Vector(dim, 1.0)}; }

void Bounds::validate() const {
  if (lower.empty()) throw std::invalid_argument("bounds must have dimension >= 1");
  if (lower.size() != upper.size()) throw std::invalid_argument("bounds dimension mismatch");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) throw std::invalid_argument("lower bound must be below upper bound");
  }
}

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

Vector Bounds::clamp(Vector x) const {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  return x;
}

void StopCriteria::validate() const {
  if (!(target_cost > 0.0)) throw std::invalid_argument("target_cost must be positive");
  if (patience_loops < 1) throw std::invalid_argument("patience_loops must be >= 1");
  if (max_evals < 1) throw std::invalid_argument("max_evals must be >= 1");
  if (!(relative_tol >= 0.0)) throw std::invalid_argument("relative_tol must be non-negative");
}

StopReason check_stop(std::span<const double> history, std::size_t n_evals, const StopCriteria& stop) {
  if (history.empty()) throw std::invalid_argument("check_stop needs a non-empty history");
  const double latest = history.back();
  if (latest < stop.target_cost) return StopReason::Target;
  if (n_evals >= stop.max_evals) return StopReason::Budget;
  if (history.size() > stop.patience_loops) {
    const double before = history[history.size() - 1 - stop.patience_loops];
    if (before - latest <= stop.relative_tol * std::abs(before)) return StopReason::Stalled;
  }
  return StopReason::Continue;
}

Objective Objective::scalar(std::function<double(std::span<const double>)> f) {
  Objective o;
  o.cost = std::move(f);
  return o;
}

Objective Objective::least_squares(std::function<Vector(std::span<const double>)> r) {
  Objective o;
  o.residual = std::move(r);
  return o;
}

double Objective::operator()(std::span<const double> x) const {
  if (cost) return cost(x);
  const Vector r = residual(x);
  if (r.empty()) return 0.0;
  double s = 0.0;
  for (double v : r) s += std::abs(v);
  return s / static_cast<double>(r.size());
}

OptimizationResult optimize(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                            const StopCriteria& stop) {
  switch (cfg.method) {
    case Method::GA: return ga_run(objective, bounds, cfg, stop);
    case Method::PSO: return pso_run(objective, bounds, cfg, stop);
    case Method::CMAES: return cmaes_run(objective, bounds, cfg, stop);
    case Method::NM: return nelder_mead_run(objective, bounds, cfg, stop);
    case Method::TRF: return trf_run(objective, bounds, cfg, stop);
  }
  throw std::invalid_argument("unknown optimization method");
}

}  // namespace tractfit
