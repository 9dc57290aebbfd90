#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "evaluator.hpp"
#include "tractfit/optimize.hpp"

namespace tractfit {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd as_eigen(const Vector& v) { return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }
Vector as_std(const VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

// Quadratic model q(s) = g's + s'Bs/2.
double model(const VectorXd& g, const MatrixXd& B, const VectorXd& s) { return g.dot(s) + 0.5 * s.dot(B * s); }

// Minimizes the model over span(basis) within radius `radius`.
VectorXd subspace_step(const VectorXd& g, const MatrixXd& B, const MatrixXd& basis, double radius) {
  const VectorXd gs = basis.transpose() * g;
  const MatrixXd Bs = basis.transpose() * B * basis;
  const auto k = basis.cols();
  auto q = [&](const VectorXd& a) { return gs.dot(a) + 0.5 * a.dot(Bs * a); };

  VectorXd best = VectorXd::Zero(k);
  double best_q = 0.0;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Bs);
  if (eig.eigenvalues().minCoeff() > 1e-14 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    const VectorXd a = Bs.ldlt().solve(-gs);
    if (a.norm() <= radius && q(a) < best_q) {
      best = a;
      best_q = q(a);
    }
  }
  // Boundary minimum: dense angular scan then golden-section refinement.
  if (k == 1) {
    for (double sgn : {-1.0, 1.0}) {
      VectorXd a(1);
      a[0] = sgn * radius;
      if (q(a) < best_q) {
        best = a;
        best_q = q(a);
      }
    }
    return basis * best;
  }
  auto on_circle = [&](double th) {
    VectorXd a(2);
    a << radius * std::cos(th), radius * std::sin(th);
    return a;
  };
  constexpr int kSamples = 360;
  double best_th = 0.0, best_th_q = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSamples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kSamples;
    const double v = q(on_circle(th));
    if (v < best_th_q) {
      best_th_q = v;
      best_th = th;
    }
  }
  double lo = best_th - 2.0 * std::numbers::pi / kSamples, hi = best_th + 2.0 * std::numbers::pi / kSamples;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
    if (q(on_circle(m1)) < q(on_circle(m2))) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const VectorXd a = on_circle(0.5 * (lo + hi));
  if (q(a) < best_q) best = a;
  return basis * best;
}

// Projection of x + s onto the box.
VectorXd projected(const VectorXd& x, const VectorXd& s, const VectorXd& lo, const VectorXd& hi) {
  return (x + s).cwiseMax(lo).cwiseMin(hi);
}

// Follows s until the first bound is hit, then continues with the crossing
// components mirrored back into the box.
VectorXd reflected(const VectorXd& x, const VectorXd& s, const VectorXd& lo, const VectorXd& hi) {
  double t_hit = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (s[j] > 0.0) t_hit = std::min(t_hit, (hi[j] - x[j]) / s[j]);
    if (s[j] < 0.0) t_hit = std::min(t_hit, (lo[j] - x[j]) / s[j]);
  }
  t_hit = std::max(t_hit, 0.0);
  if (t_hit >= 1.0) return x + s;
  VectorXd at = x + t_hit * s;
  VectorXd rest = (1.0 - t_hit) * s;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if ((at[j] >= hi[j] && rest[j] > 0.0) || (at[j] <= lo[j] && rest[j] < 0.0)) rest[j] = -rest[j];
  }
  return (at + rest).cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

OptimizationResult trf_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                           const StopCriteria& stop) {
  detail::Evaluator ev(objective, bounds, cfg, stop);
  const auto& s = cfg.trf;
  const std::size_t dim = bounds.dim();
  const auto n = static_cast<Eigen::Index>(dim);
  const VectorXd lo = as_eigen(bounds.lower);
  const VectorXd hi = as_eigen(bounds.upper);

  Vector x = ev.initial_point();
  auto first = ev.evaluate_residual(x);
  if (!first) return ev.finish();
  VectorXd r = as_eigen(first->residual);
  double f = 0.5 * r.squaredNorm();
  double radius = s.initial_radius;
  if (ev.end_iteration(std::span<const Vector>(&x, 1)) != StopReason::Continue) return ev.finish();

  MatrixXd J;
  bool need_jacobian = true;
  bool exhausted = false;
  while (!exhausted) {
    if (need_jacobian) {
      J.resize(r.size(), n);
      for (std::size_t j = 0; j < dim && !exhausted; ++j) {
        Vector probe = x;
        double h = s.fd_step * (bounds.upper[j] - bounds.lower[j]);
        if (probe[j] + h > bounds.upper[j]) h = -h;
        probe[j] = std::clamp(probe[j] + h, bounds.lower[j], bounds.upper[j]);
        const double actual = probe[j] - x[j];
        auto pr = ev.evaluate_residual(probe);
        if (!pr) {
          exhausted = true;
          break;
        }
        J.col(static_cast<Eigen::Index>(j)) = (as_eigen(pr->residual) - r) / actual;
      }
      if (exhausted) break;
      need_jacobian = false;
    }

    const VectorXd g = J.transpose() * r;
    const MatrixXd B = J.transpose() * J;
    const VectorXd xe = as_eigen(x);

    VectorXd candidate = xe;
    double predicted = 0.0;
    if (g.norm() > 0.0) {
      // Subspace spanned by the gradient and the Gauss-Newton direction.
      const VectorXd gn = J.completeOrthogonalDecomposition().solve(-r);
      MatrixXd basis(n, 1);
      basis.col(0) = g.normalized();
      const VectorXd ortho = gn - basis.col(0) * basis.col(0).dot(gn);
      if (n > 1 && ortho.norm() > 1e-10 * std::max(1.0, gn.norm())) {
        basis.conservativeResize(n, 2);
        basis.col(1) = ortho.normalized();
      }
      const VectorXd step = subspace_step(g, B, basis, radius);
      const VectorXd options[] = {projected(xe, step, lo, hi), reflected(xe, step, lo, hi)};
      double best_model = 0.0;
      for (const auto& opt : options) {
        const double m = model(g, B, opt - xe);
        if (m < best_model) {
          best_model = m;
          candidate = opt;
        }
      }
      predicted = -best_model;
    }

    const double step_norm = (candidate - xe).norm();
    if (step_norm > 0.0 && predicted > 0.0) {
      const Vector cx = as_std(candidate);
      auto trial = ev.evaluate_residual(cx);
      if (!trial) break;
      const VectorXd rt = as_eigen(trial->residual);
      const double ft = 0.5 * rt.squaredNorm();
      const double rho = (f - ft) / predicted;
      if (rho < 0.25) {
        radius = 0.25 * step_norm;
      } else if (rho > 0.75 && step_norm >= 0.95 * radius) {
        radius = std::min(2.0 * radius, s.max_radius);
      }
      if (rho > 1e-4 && ft < f) {
        x = cx;
        r = rt;
        f = ft;
        need_jacobian = true;
      }
    } else {
      // Stationary within the box; nothing left to try at this radius.
      radius = std::max(radius * 0.5, 1e-12);
    }
    if (ev.end_iteration(std::span<const Vector>(&x, 1)) != StopReason::Continue) break;
  }
  if (exhausted) ev.end_iteration(std::span<const Vector>(&x, 1));
  return ev.finish();
}

}  // namespace tractfit
