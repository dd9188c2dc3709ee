#ifndef MARGSIM_EXACT_SOLVER_HPP_
#define MARGSIM_EXACT_SOLVER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "margsim/dynamics.hpp"

namespace margsim {

enum class Dynamics { Marg, Smarg };

inline constexpr std::size_t kDefaultStateCap = 1'000'000;

// Reachable state space of one of the single-component chains. State 0 is
// the initial state. Simple states and Δ are absorbing leaves carrying their
// root weight.
class StateGraph {
 public:
  struct Edge {
    std::uint32_t target;
    double rate;
  };

  std::size_t size() const { return states_.size(); }
  const ProcessState& state(std::size_t k) const { return states_[k]; }
  bool absorbing(std::size_t k) const { return absorbing_[k]; }
  double boundary_value(std::size_t k) const { return boundary_[k]; }
  std::span<const Edge> edges(std::size_t k) const {
    return {edges_.data() + offsets_[k], edges_.data() + offsets_[k + 1]};
  }
  std::optional<std::size_t> index_of(const ProcessState& s) const;

 private:
  friend class StateGraphBuilder;

  std::vector<ProcessState> states_;
  std::vector<bool> absorbing_;
  std::vector<double> boundary_;
  std::vector<std::size_t> offsets_;
  std::vector<Edge> edges_;
  std::unordered_map<ProcessState, std::uint32_t, ProcessStateHash> index_;
};

// Breadth-first closure of `initial` under the chosen chain. Throws
// ResourceCapError when more than `cap` states are reached.
StateGraph build_state_graph(const CountingMeasure& initial, const Model& model, Dynamics dynamics,
                             std::size_t cap = kDefaultStateCap);
// Split chain only; needs no recombination data.
StateGraph build_split_state_graph(const CountingMeasure& initial, const MutationModel& mutation,
                                   std::size_t cap = kDefaultStateCap);

struct AbsorptionSolution {
  std::vector<double> values;  // f(s) = E[q(R_T) | R_0 = s]
  double residual = 0.0;        // ‖A f - b‖∞ of the first-step system
  std::size_t components = 0;   // strongly connected blocks of transient states
  std::size_t largest_component = 0;

  double root() const { return values.front(); }
};

// Solves f(s) = Σ_t rate(s→t)/total(s)·f(t) with the absorbing boundary
// by block elimination over the strongly connected components of the
// transient states in dependency order. Small blocks use dense LU with
// pivoting, large ones Jacobi-preconditioned BiCGSTAB with a sparse LU
// fallback. Throws InternalError if the final residual exceeds 1e-12.
AbsorptionSolution solve_q(const StateGraph& graph);

// q(ν) at the model's rho.
double exact_q(const CountingMeasure& nu, const Model& model, std::size_t cap = kDefaultStateCap);

// q of a single-site sample given by per-allele counts, from the split chain.
double single_site_q(int site, std::span<const std::uint32_t> counts, const MutationModel& mutation,
                     std::size_t cap = kDefaultStateCap);
// As above for a measure of single-site types observed at `site`.
double single_site_q(const CountingMeasure& nu, const MutationModel& mutation, std::size_t cap = kDefaultStateCap);

}  // namespace margsim

#endif  // MARGSIM_EXACT_SOLVER_HPP_
