#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "evaluator.hpp"
#include "tractfit/optimize.hpp"

namespace tractfit {

namespace {

constexpr double kGeneMax = static_cast<double>(std::numeric_limits<std::uint32_t>::max());

struct Individual {
  std::vector<std::uint32_t> genes;
  Vector x;
  double cost = 0.0;
};

std::uint32_t gray_encode(std::uint32_t v) { return v ^ (v >> 1); }

std::uint32_t gray_decode(std::uint32_t g) {
  for (std::uint32_t shift = 1; shift < 32; shift <<= 1) g ^= g >> shift;
  return g;
}

}  // namespace

std::uint32_t encode_gene(double x, double lower, double upper) {
  const double u = std::clamp((x - lower) / (upper - lower), 0.0, 1.0);
  return gray_encode(static_cast<std::uint32_t>(std::llround(u * kGeneMax)));
}

double decode_gene(std::uint32_t gene, double lower, double upper) {
  const std::uint32_t level = gray_decode(gene);
  if (level == 0) return lower;
  if (level == std::numeric_limits<std::uint32_t>::max()) return upper;
  return std::clamp(lower + (upper - lower) * (static_cast<double>(level) / kGeneMax), lower, upper);
}

OptimizationResult ga_run(const Objective& objective, const Bounds& bounds, const OptimizerConfig& cfg,
                          const StopCriteria& stop) {
  detail::Evaluator ev(objective, bounds, cfg, stop);
  const auto& s = cfg.ga;
  if (s.bits_per_gene != 32) throw std::invalid_argument("only 32-bit genes are supported");
  if (s.population < 2) throw std::invalid_argument("GA population must be >= 2");
  if (s.elites >= s.population) throw std::invalid_argument("GA elites must be smaller than the population");
  if (s.tournament_size < 1) throw std::invalid_argument("GA tournament size must be >= 1");

  const std::size_t dim = bounds.dim();
  const std::size_t total_bits = dim * 32;
  CounterRng rng(cfg.seed, hash_string("ga"));

  auto decode = [&](const std::vector<std::uint32_t>& genes) {
    Vector x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = decode_gene(genes[j], bounds.lower[j], bounds.upper[j]);
    return x;
  };

  // Generation 0: the start point plus random chromosomes.
  std::vector<Individual> pop(s.population);
  const Vector x0 = ev.initial_point();
  for (std::size_t i = 0; i < pop.size(); ++i) {
    auto& ind = pop[i];
    ind.genes.resize(dim);
    if (i == 0) {
      for (std::size_t j = 0; j < dim; ++j) ind.genes[j] = encode_gene(x0[j], bounds.lower[j], bounds.upper[j]);
      ind.x = x0;
    } else {
      for (auto& g : ind.genes) g = static_cast<std::uint32_t>(rng.next_u64() >> 32);
      ind.x = decode(ind.genes);
    }
  }

  std::vector<Vector> xs(pop.size());
  auto snapshot = [&] {
    for (std::size_t i = 0; i < pop.size(); ++i) xs[i] = pop[i].x;
    return std::span<const Vector>(xs);
  };

  {
    std::vector<Vector> cand;
    for (auto& ind : pop) cand.push_back(ind.x);
    const auto costs = ev.evaluate(cand);
    if (costs.size() < cand.size()) {
      pop.resize(costs.size());
      for (std::size_t i = 0; i < costs.size(); ++i) pop[i].cost = costs[i];
      ev.end_iteration(snapshot());
      return ev.finish();
    }
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i].cost = costs[i];
  }
  if (ev.end_iteration(snapshot()) != StopReason::Continue) return ev.finish();

  auto tournament = [&]() -> const Individual& {
    const Individual* best = &pop[rng.below(pop.size())];
    for (std::size_t t = 1; t < s.tournament_size; ++t) {
      const Individual& c = pop[rng.below(pop.size())];
      if (c.cost < best->cost) best = &c;
    }
    return *best;
  };

  auto flip = [](std::vector<std::uint32_t>& genes, std::size_t bit) {
    genes[bit / 32] ^= (1u << (31 - bit % 32));
  };

  while (true) {
    std::vector<std::size_t> order(pop.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pop[a].cost < pop[b].cost; });

    std::vector<Individual> next;
    next.reserve(pop.size());
    for (std::size_t e = 0; e < s.elites; ++e) next.push_back(pop[order[e]]);

    // Offspring; `modified` marks children that differ from their parent.
    std::vector<Individual> children;
    std::vector<bool> modified;
    const std::size_t n_children = pop.size() - s.elites;
    while (children.size() < n_children) {
      Individual a = tournament();
      Individual b = tournament();
      bool changed_a = false, changed_b = false;
      if (total_bits > 1 && rng.uniform() < s.crossover_rate) {
        // Single cut point in [1, total_bits - 1]; tail bits are exchanged.
        const std::size_t cut = 1 + rng.below(total_bits - 1);
        for (std::size_t bit = cut; bit < total_bits; ++bit) {
          const std::uint32_t mask = 1u << (31 - bit % 32);
          const std::size_t g = bit / 32;
          if ((a.genes[g] & mask) != (b.genes[g] & mask)) {
            a.genes[g] ^= mask;
            b.genes[g] ^= mask;
            changed_a = changed_b = true;
          }
        }
      }
      for (std::size_t bit = 0; bit < total_bits; ++bit) {
        if (rng.uniform() < s.mutation_rate) {
          flip(a.genes, bit);
          changed_a = true;
        }
      }
      for (std::size_t bit = 0; bit < total_bits; ++bit) {
        if (rng.uniform() < s.mutation_rate) {
          flip(b.genes, bit);
          changed_b = true;
        }
      }
      if (changed_a) a.x = decode(a.genes);
      if (changed_b) b.x = decode(b.genes);
      children.push_back(std::move(a));
      modified.push_back(changed_a);
      if (children.size() < n_children) {
        children.push_back(std::move(b));
        modified.push_back(changed_b);
      }
    }

    // Unmodified copies keep their parent's cost and are not re-evaluated.
    std::vector<Vector> cand;
    std::vector<std::size_t> slot;
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (modified[i]) {
        cand.push_back(children[i].x);
        slot.push_back(i);
      }
    }
    const auto costs = ev.evaluate(cand);
    for (std::size_t k = 0; k < costs.size(); ++k) children[slot[k]].cost = costs[k];
    const bool exhausted = costs.size() < cand.size();
    if (exhausted) {
      // Drop unevaluated children; keep their parents' slots filled by elites.
      for (std::size_t k = costs.size(); k < slot.size(); ++k) children[slot[k]] = pop[order.front()];
    }
    for (auto& c : children) next.push_back(std::move(c));
    pop = std::move(next);
    if (ev.end_iteration(snapshot()) != StopReason::Continue || exhausted) break;
  }
  return ev.finish();
}

}  // namespace tractfit
