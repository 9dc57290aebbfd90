#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "evaluator.hpp"
#include "tractfit/optimize.hpp"

namespace tractfit {

OptimizationResult nelder_mead_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                                   const StopCriteria& stop) {
  detail::Evaluator ev(objective, bounds, cfg, stop);
  const auto& s = cfg.nm;
  const std::size_t dim = bounds.dim();

  // Start point plus one axis step per dimension, stepping inward at a bound.
  std::vector<Vector> simplex(dim + 1, ev.initial_point());
  for (std::size_t j = 0; j < dim; ++j) {
    const double step = s.initial_step * (bounds.upper[j] - bounds.lower[j]);
    double& v = simplex[j + 1][j];
    v = v + step <= bounds.upper[j] ? v + step : v - step;
    v = std::clamp(v, bounds.lower[j], bounds.upper[j]);
  }
  std::vector<double> f = ev.evaluate(simplex);
  if (f.size() < simplex.size()) {
    simplex.resize(f.size());
    ev.end_iteration(simplex);
    return ev.finish();
  }
  if (ev.end_iteration(simplex) != StopReason::Continue) return ev.finish();

  auto affine = [&](const Vector& a, const Vector& b, double t) {
    // a + t (b - a), clamped to the box.
    Vector out(dim);
    for (std::size_t j = 0; j < dim; ++j) out[j] = a[j] + t * (b[j] - a[j]);
    return bounds.clamp(std::move(out));
  };

  std::vector<std::size_t> order(dim + 1);
  bool exhausted = false;
  while (!exhausted) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[dim - (dim > 0 ? 1 : 0)];

    Vector centroid(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[order[k]][j];
    }
    for (auto& c : centroid) c /= static_cast<double>(dim);

    // Reflection: c + alpha (c - worst).
    const Vector xr = affine(centroid, simplex[worst], -s.alpha);
    const auto fr = ev.evaluate_one(xr);
    if (!fr) break;

    bool shrink = false;
    if (*fr < f[best]) {
      const Vector xe = affine(centroid, xr, s.gamma);
      const auto fe = ev.evaluate_one(xe);
      if (fe && *fe < *fr) {
        simplex[worst] = xe;
        f[worst] = *fe;
      } else {
        simplex[worst] = xr;
        f[worst] = *fr;
      }
      exhausted = !fe;
    } else if (*fr < f[second_worst]) {
      simplex[worst] = xr;
      f[worst] = *fr;
    } else if (*fr < f[worst]) {
      const Vector xc = affine(centroid, xr, s.rho);
      const auto fc = ev.evaluate_one(xc);
      if (!fc) {
        exhausted = true;
      } else if (*fc <= *fr) {
        simplex[worst] = xc;
        f[worst] = *fc;
      } else {
        shrink = true;
      }
    } else {
      const Vector xc = affine(centroid, simplex[worst], s.rho);
      const auto fc = ev.evaluate_one(xc);
      if (!fc) {
        exhausted = true;
      } else if (*fc < f[worst]) {
        simplex[worst] = xc;
        f[worst] = *fc;
      } else {
        shrink = true;
      }
    }

    if (shrink) {
      std::vector<Vector> moved;
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k <= dim; ++k) {
        if (k == best) continue;
        moved.push_back(affine(simplex[best], simplex[k], s.sigma));
        idx.push_back(k);
      }
      const auto fs = ev.evaluate(moved);
      for (std::size_t m = 0; m < fs.size(); ++m) {
        simplex[idx[m]] = moved[m];
        f[idx[m]] = fs[m];
      }
      exhausted = fs.size() < moved.size();
    }
    if (ev.end_iteration(simplex) != StopReason::Continue) break;
  }
  return ev.finish();
}

}  // namespace tractfit
