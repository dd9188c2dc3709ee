#include "margsim/exact_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <string>

namespace margsim {

class StateGraphBuilder {
 public:
  template <typename Transitions, typename Weight>
  static StateGraph build(const CountingMeasure& initial, std::size_t cap, Transitions&& transitions,
                          Weight&& weight) {
    StateGraph g;
    std::deque<std::uint32_t> queue;
    auto intern = [&](const ProcessState& s) -> std::uint32_t {
      auto [it, inserted] = g.index_.try_emplace(s, static_cast<std::uint32_t>(g.states_.size()));
      if (inserted) {
        if (g.states_.size() >= cap) {
          throw ResourceCapError("instance too large for exact solve: more than " + std::to_string(cap) +
                                 " states reached");
        }
        g.states_.push_back(s);
        const bool terminal = s.is_terminal();
        g.absorbing_.push_back(terminal);
        g.boundary_.push_back(terminal ? weight(s) : 0.0);
        queue.push_back(it->second);
      }
      return it->second;
    };

    intern(ProcessState(initial));
    // States are expanded in index order, so edges can be laid out CSR-style.
    std::vector<std::vector<StateGraph::Edge>> adjacency;
    while (!queue.empty()) {
      const std::uint32_t k = queue.front();
      queue.pop_front();
      if (adjacency.size() <= k) adjacency.resize(k + 1);
      if (g.absorbing_[k]) continue;
      const ProcessState current = g.states_[k];
      for (const auto& t : transitions(current.measure())) {
        const std::uint32_t target = intern(t.target);
        adjacency[k].push_back({target, t.rate});
      }
      if (adjacency[k].empty()) throw InternalError("non-absorbing state without transitions: " + current.to_string());
    }
    adjacency.resize(g.states_.size());
    g.offsets_.assign(1, 0);
    for (auto& list : adjacency) {
      g.edges_.insert(g.edges_.end(), list.begin(), list.end());
      g.offsets_.push_back(g.edges_.size());
    }
    return g;
  }
};

std::optional<std::size_t> StateGraph::index_of(const ProcessState& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StateGraph build_state_graph(const CountingMeasure& initial, const Model& model, Dynamics dynamics,
                             std::size_t cap) {
  if (dynamics == Dynamics::Smarg) return build_split_state_graph(initial, model.mutation(), cap);
  model.check_measure(initial);
  return StateGraphBuilder::build(
      initial, cap, [&](const CountingMeasure& nu) { return marg_transitions(nu, model); },
      [&](const ProcessState& s) { return root_weight(s, model.mutation()); });
}

StateGraph build_split_state_graph(const CountingMeasure& initial, const MutationModel& mutation,
                                   std::size_t cap) {
  if (!initial.all_single_site()) throw PreconditionError("split-chain state graph needs single-site particles");
  return StateGraphBuilder::build(
      initial, cap, [&](const CountingMeasure& nu) { return smarg_transitions(nu, mutation); },
      [&](const ProcessState& s) { return root_weight(s, mutation); });
}

namespace {

// Tarjan's algorithm over transient states, iterative. Components come out
// in reverse topological order: every successor block precedes its
// predecessors.
std::vector<std::vector<std::uint32_t>> transient_components(const StateGraph& graph) {
  const std::size_t n = graph.size();
  constexpr std::uint32_t kUnvisited = UINT32_MAX;
  std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> frames;  // (state, next edge)
  std::vector<std::vector<std::uint32_t>> components;
  std::uint32_t counter = 0;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (graph.absorbing(root) || index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      const auto edges = graph.edges(v);
      if (pos < edges.size()) {
        const std::uint32_t w = edges[pos++].target;
        if (graph.absorbing(w)) continue;
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::uint32_t done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<std::uint32_t> component;
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component.push_back(w);
        } while (w != done);
        components.push_back(std::move(component));
      }
    }
  }
  return components;
}

double exit_total(const StateGraph& graph, std::size_t k) {
  double total = 0.0;
  for (const auto& e : graph.edges(k)) total += e.rate;
  if (!(total > 0.0)) throw InternalError("transient state with zero exit rate");
  return total;
}

// Solves one block given the values of every state outside it.
void solve_component(const StateGraph& graph, const std::vector<std::uint32_t>& component,
                     std::vector<std::int64_t>& local, std::vector<double>& f) {
  const auto m = static_cast<Eigen::Index>(component.size());
  for (Eigen::Index r = 0; r < m; ++r) local[component[r]] = r;

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::size_t k = component[r];
    const double total = exit_total(graph, k);
    triplets.emplace_back(r, r, 1.0);
    for (const auto& e : graph.edges(k)) {
      const double p = e.rate / total;
      if (local[e.target] >= 0) {
        triplets.emplace_back(r, local[e.target], -p);
      } else {
        rhs(r) += p * f[e.target];
      }
    }
  }

  Eigen::VectorXd x;
  if (m <= 256) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (const auto& t : triplets) a(t.row(), t.col()) += t.value();
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    x = lu.solve(rhs);
    for (int pass = 0; pass < 4 && (a * x - rhs).lpNorm<Eigen::Infinity>() > 1e-14; ++pass) x += lu.solve(rhs - a * x);
  } else {
    Eigen::SparseMatrix<double, Eigen::RowMajor> a(m, m);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    // I - P is diagonally dominant, so Jacobi-preconditioned BiCGSTAB
    // converges in a few dozen sweeps; SparseLU fill-in on these blocks is
    // near dense.
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>> krylov;
    krylov.setTolerance(1e-15);
    krylov.setMaxIterations(2000);
    krylov.compute(a);
    x = krylov.solve(rhs);
    if (!x.allFinite() || (a * x - rhs).lpNorm<Eigen::Infinity>() > 1e-14) {
      const Eigen::SparseMatrix<double> column_major = a;
      Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
      lu.analyzePattern(column_major);
      lu.factorize(column_major);
      if (lu.info() != Eigen::Success) throw InternalError("absorption system is singular: " + lu.lastErrorMessage());
      x = lu.solve(rhs);
      for (int pass = 0; pass < 4 && (a * x - rhs).lpNorm<Eigen::Infinity>() > 1e-14; ++pass) x += lu.solve(rhs - a * x);
    }
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    f[component[r]] = x(r);
    local[component[r]] = -1;
  }
}

}  // namespace

AbsorptionSolution solve_q(const StateGraph& graph) {
  const std::size_t n = graph.size();
  AbsorptionSolution sol;
  sol.values.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (graph.absorbing(k)) sol.values[k] = graph.boundary_value(k);
  }

  const auto components = transient_components(graph);
  std::vector<std::int64_t> local(n, -1);
  for (const auto& component : components) {
    sol.largest_component = std::max(sol.largest_component, component.size());
    if (component.size() == 1) {
      // No self-edges, so every successor is already solved.
      const std::size_t k = component.front();
      const double total = exit_total(graph, k);
      double v = 0.0;
      for (const auto& e : graph.edges(k)) v += e.rate / total * sol.values[e.target];
      sol.values[k] = v;
    } else {
      solve_component(graph, component, local, sol.values);
    }
  }
  sol.components = components.size();

  // Residual of the full first-step system.
  double residual = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (graph.absorbing(k)) continue;
    const double total = exit_total(graph, k);
    double v = 0.0;
    for (const auto& e : graph.edges(k)) v += e.rate / total * sol.values[e.target];
    residual = std::max(residual, std::abs(sol.values[k] - v));
  }
  if (!std::isfinite(residual) || residual > 1e-12) {
    throw InternalError("absorption solve residual " + std::to_string(residual) + " above 1e-12");
  }
  sol.residual = residual;
  return sol;
}

double exact_q(const CountingMeasure& nu, const Model& model, std::size_t cap) {
  return solve_q(build_state_graph(nu, model, Dynamics::Marg, cap)).root();
}

double single_site_q(int site, std::span<const std::uint32_t> counts, const MutationModel& mutation,
                     std::size_t cap) {
  CountingMeasure nu;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] == 0) continue;
    nu.add(FuzzyType().set(site, AlleleSet::single(static_cast<int>(a))), counts[a]);
  }
  return single_site_q(nu, mutation, cap);
}

double single_site_q(const CountingMeasure& nu, const MutationModel& mutation, std::size_t cap) {
  const SiteSet sites = nu.observed_sites();
  if (sites.size() > 1 || !nu.all_single_site()) throw PreconditionError("single_site_q: measure spans several sites");
  return solve_q(build_split_state_graph(nu, mutation, cap)).root();
}

}  // namespace margsim
