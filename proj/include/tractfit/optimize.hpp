#pragma once

// Bounded black-box minimizers sharing one stop rule and result type:
// genetic algorithm, particle swarm, CMA-ES, Nelder-Mead and a
// trust-region-reflective least-squares solver.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tractfit {

using Vector = std::vector<double>;

enum class Method { GA, PSO, CMAES, NM, TRF };

std::string_view to_string(Method m);
std::optional<Method> method_from_string(std::string_view name);

enum class StopReason { Continue, Target, Stalled, Budget };

std::string_view to_string(StopReason r);

struct Bounds {
  Vector lower;
  Vector upper;

  static Bounds unit(std::size_t dim);

  std::size_t dim() const { return lower.size(); }
  // Throws std::invalid_argument unless sizes agree, dim >= 1 and lower < upper.
  void validate() const;
  bool contains(std::span<const double> x) const;
  Vector clamp(Vector x) const;
};

struct StopCriteria {
  double target_cost = 1e-4;
  std::size_t patience_loops = 20;
  double relative_tol = 1e-6;
  std::size_t max_evals = 2000;

  void validate() const;
};

// Decides whether to stop after an iteration. `history` holds the best cost
// after each iteration (index 0 is the initial evaluation). Precedence:
// target, then budget, then stalled.
StopReason check_stop(std::span<const double> history, std::size_t n_evals, const StopCriteria& stop);

struct GaSettings {
  int bits_per_gene = 32;
  double crossover_rate = 0.9;
  double mutation_rate = 0.03;  // per bit
  std::size_t population = 10;
  std::size_t tournament_size = 2;
  std::size_t elites = 1;
};

struct PsoSettings {
  double c1 = 0.5;  // cognitive
  double c2 = 0.3;  // social
  double w = 0.9;   // inertia
  std::size_t particles = 10;
  double initial_velocity = 0.1;  // fraction of the box width
};

struct CmaesSettings {
  double sigma0 = 0.3;
  std::size_t lambda = 0;  // 0: 4 + floor(3 ln d)
  int max_resamples = 100;
};

struct NelderMeadSettings {
  double initial_step = 0.1;
  double alpha = 1.0;  // reflection
  double gamma = 2.0;  // expansion
  double rho = 0.5;    // contraction
  double sigma = 0.5;  // shrink
};

struct TrfSettings {
  double fd_step = 1e-3;
  double initial_radius = 0.25;
  double max_radius = 1.0;
};

// Called once per iteration with the method's current working set
// (population, swarm, simplex, or trust-region iterate).
using IterationObserver = std::function<void(std::size_t iteration, std::span<const Vector> points)>;

struct OptimizerConfig {
  Method method = Method::GA;
  std::uint64_t seed = 0;
  // Start point; drawn uniformly inside the bounds from `seed` when absent.
  std::optional<Vector> initial;
  unsigned threads = 1;  // 0: hardware concurrency
  GaSettings ga;
  PsoSettings pso;
  CmaesSettings cmaes;
  NelderMeadSettings nm;
  TrfSettings trf;
  IterationObserver observer;
};

struct OptimizationResult {
  Vector best_x;
  double best_cost = 0.0;
  std::size_t n_evals = 0;
  std::size_t n_iterations = 0;
  double elapsed_s = 0.0;
  StopReason stop_reason = StopReason::Budget;
  std::vector<double> history;
};

// A scalar cost, optionally backed by a residual vector. When `residual` is
// set the cost is mean |r| and the trust-region solver works on 1/2 |r|^2.
struct Objective {
  std::function<double(std::span<const double>)> cost;
  std::function<Vector(std::span<const double>)> residual;

  static Objective scalar(std::function<double(std::span<const double>)> f);
  static Objective least_squares(std::function<Vector(std::span<const double>)> r);

  bool has_residual() const { return static_cast<bool>(residual); }
  double operator()(std::span<const double> x) const;
};

// Dispatches on cfg.method. Throws std::invalid_argument for invalid bounds
// or stop criteria, and for CMA-ES with a one-dimensional problem.
OptimizationResult optimize(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                            const StopCriteria& stop);

OptimizationResult ga_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                          const StopCriteria& stop);
OptimizationResult pso_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                           const StopCriteria& stop);
OptimizationResult cmaes_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                             const StopCriteria& stop);
OptimizationResult nelder_mead_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                                   const StopCriteria& stop);
OptimizationResult trf_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                           const StopCriteria& stop);

// Fixed-point, Gray-coded genes used by the genetic algorithm.
std::uint32_t encode_gene(double x, double lower, double upper);
double decode_gene(std::uint32_t gene, double lower, double upper);

// Default CMA-ES population size, 4 + floor(3 ln d).
std::size_t cmaes_default_lambda(std::size_t dim);

// Ask/tell CMA-ES state. Exposed so callers can inspect the distribution.
class CmaesState {
 public:
  CmaesState(const Vector& mean, double sigma, std::size_t lambda);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t lambda() const { return lambda_; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

  // One unconstrained draw m + sigma * B D z.
  Eigen::VectorXd sample(const Eigen::VectorXd& z) const;

  // Updates mean, paths, covariance and step size from the evaluated
  // population (any order; sorted internally by cost).
  void tell(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& costs);

 private:
  void decompose();

  std::size_t lambda_, mu_;
  Eigen::VectorXd weights_;
  double mueff_, cc_, cs_, c1_, cmu_, damps_, chi_n_;
  Eigen::VectorXd mean_, pc_, ps_;
  Eigen::MatrixXd cov_, basis_;
  Eigen::VectorXd scales_;
  double sigma_;
  std::size_t generation_ = 0;
};

}  // namespace tractfit
