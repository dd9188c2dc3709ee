#ifndef MARGSIM_TESTS_SUPPORT_HPP_
#define MARGSIM_TESTS_SUPPORT_HPP_

// Random instance generators and brute-force oracles shared by the tests.
// Oracles deliberately avoid the library's own algorithms.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "margsim/asymptotics.hpp"
#include "margsim/dynamics.hpp"
#include "margsim/model.hpp"

namespace margsim::testing {

using Engine = std::mt19937_64;

inline double uniform(Engine& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
inline int uniform_int(Engine& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

inline FuzzyType exact_type(std::initializer_list<std::pair<int, int>> entries) { return FuzzyType::exact(entries); }

inline MutationKernel pim_kernel(double u, std::vector<double> row) { return MutationKernel::parent_independent(u, row); }

inline std::vector<double> random_distribution(Engine& g, int k, double floor = 0.05) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& v : p) s += (v = uniform(g, floor, 1.0));
  for (auto& v : p) v /= s;
  return p;
}

// Irreducible kernel: strictly positive off-diagonal entries.
inline MutationKernel random_kernel(Engine& g, int k, double u, bool pim) {
  if (pim) return pim_kernel(u, random_distribution(g, k));
  std::vector<std::vector<double>> rows;
  for (int a = 0; a < k; ++a) rows.push_back(random_distribution(g, k));
  return MutationKernel(u, rows);
}

inline MutationModel random_mutation(Engine& g, int n, int max_alleles, bool allow_non_pim = true) {
  std::vector<MutationKernel> kernels;
  for (int i = 0; i < n; ++i) {
    const int k = uniform_int(g, 2, max_alleles);
    const bool pim = !allow_non_pim || uniform_int(g, 0, 1) == 0;
    kernels.push_back(random_kernel(g, k, uniform(g, 0.3, 2.0), pim));
  }
  return MutationModel(kernels);
}

// Uniformly random set partition of {0..n-1} by random block labels.
inline Partition random_partition(Engine& g, int n) {
  std::vector<SiteSet> blocks(n);
  for (int i = 0; i < n; ++i) {
    const int label = uniform_int(g, 0, n - 1);
    blocks[label] = blocks[label].with(i);
  }
  std::vector<SiteSet> nonempty;
  for (auto b : blocks) {
    if (!b.empty()) nonempty.push_back(b);
  }
  return Partition(nonempty);
}

// Random weighted partitions, always including the all-singletons
// partition so the spec separates every pair.
inline RecombinationSpec random_spec(Engine& g, int n, double rho = 1.0) {
  if (n == 1) return RecombinationSpec(1, {}, rho);
  std::vector<RecombinationTerm> terms;
  terms.push_back({Partition::singletons(SiteSet::full(n)), uniform(g, 0.1, 1.0)});
  const int extra = uniform_int(g, 0, 3);
  for (int k = 0; k < extra; ++k) terms.push_back({random_partition(g, n), uniform(g, 0.1, 2.0)});
  return RecombinationSpec(n, terms, rho);
}

inline FuzzyType random_exact_type(Engine& g, const MutationModel& m, SiteSet sites) {
  FuzzyType x;
  for (int i : sites) x.set(i, AlleleSet::single(uniform_int(g, 0, m.kernel(i).alleles() - 1)));
  return x;
}

inline SiteSet random_nonempty_sites(Engine& g, int n) {
  SiteSet s;
  while (s.empty()) s = SiteSet::from_bits(uniform_int(g, 0, (1 << n) - 1));
  return s;
}

inline FuzzyType random_fuzzy_type(Engine& g, const MutationModel& m, SiteSet sites) {
  FuzzyType x;
  for (int i : sites) {
    const int k = m.kernel(i).alleles();
    x.set(i, AlleleSet::from_bits(uniform_int(g, 1, (1 << k) - 1)));
  }
  return x;
}

inline CountingMeasure random_exact_measure(Engine& g, const MutationModel& m, int n, int max_mass) {
  CountingMeasure nu;
  const int mass = uniform_int(g, 1, max_mass);
  for (int k = 0; k < mass; ++k) nu.add(random_exact_type(g, m, random_nonempty_sites(g, n)));
  return nu;
}

inline CountingMeasure random_fuzzy_measure(Engine& g, const MutationModel& m, int n, int max_mass) {
  CountingMeasure nu;
  const int mass = uniform_int(g, 1, max_mass);
  for (int k = 0; k < mass; ++k) nu.add(random_fuzzy_type(g, m, random_nonempty_sites(g, n)));
  return nu;
}

// Ascending-factorial closed form written out with lgamma.
inline double pim_oracle(const std::vector<std::uint32_t>& counts, double u, const std::vector<double>& row) {
  double log_value = 0.0;
  std::uint32_t n = 0;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] == 0) continue;
    const double theta = u * row[a];
    log_value += std::lgamma(theta + counts[a]) - std::lgamma(theta);
    n += counts[a];
  }
  log_value -= std::lgamma(u + n) - std::lgamma(u);
  return std::exp(log_value);
}

// Two-site sampling probability under parent-independent mutation by the
// classical recursion on exact partial types: pair coalescence at rate 1,
// mutation u_i/2 per observed lineage (the lineage forgets its allele at a
// cost π_i(a)), recombination ρ·r/2 per doubly observed lineage. Solved by
// fixed-point sweeps in a dependency-free way, so it shares nothing with
// the library solver.
class TwoLocusPimOracle {
 public:
  TwoLocusPimOracle(std::vector<double> pi0, std::vector<double> pi1, double u0, double u1, double rho_r)
      : pi_{std::move(pi0), std::move(pi1)}, u_{u0, u1}, rec_(rho_r) {}

  // Lineages as (allele at 0 or -1, allele at 1 or -1).
  double operator()(std::vector<std::pair<int, int>> lineages) {
    std::sort(lineages.begin(), lineages.end());
    return value(lineages);
  }

 private:
  using State = std::vector<std::pair<int, int>>;

  static State canon(State s) {
    std::sort(s.begin(), s.end());
    return s;
  }

  bool terminal(const State& s) const {
    int c0 = 0, c1 = 0;
    for (auto [a, b] : s) {
      c0 += a >= 0;
      c1 += b >= 0;
    }
    return c0 <= 1 && c1 <= 1;
  }

  double weight(const State& s) const {
    double w = 1.0;
    for (auto [a, b] : s) {
      if (a >= 0) w *= pi_[0][a];
      if (b >= 0) w *= pi_[1][b];
    }
    return w;
  }

  // Terms of the recursion: (probability factor, target or nullopt for 0).
  std::vector<std::pair<double, std::optional<State>>> moves(const State& s) const {
    std::vector<std::pair<double, std::optional<State>>> out;
    std::vector<double> rates;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto x = s[i], y = s[j];
        const bool ok = (x.first < 0 || y.first < 0 || x.first == y.first) &&
                        (x.second < 0 || y.second < 0 || x.second == y.second);
        rates.push_back(1.0);
        if (!ok) {
          out.emplace_back(0.0, std::nullopt);
          continue;
        }
        State t;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != i && k != j) t.push_back(s[k]);
        }
        t.emplace_back(x.first >= 0 ? x.first : y.first, x.second >= 0 ? x.second : y.second);
        out.emplace_back(1.0, canon(t));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = s[i];
      for (int site = 0; site < 2; ++site) {
        const int allele = site == 0 ? x.first : x.second;
        if (allele < 0) continue;
        State t;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != i) t.push_back(s[k]);
        }
        auto y = x;
        (site == 0 ? y.first : y.second) = -1;
        if (y.first >= 0 || y.second >= 0) t.push_back(y);
        rates.push_back(u_[site] / 2.0);
        out.emplace_back(pi_[site][allele], canon(t));
      }
      if (x.first >= 0 && x.second >= 0) {
        State t;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != i) t.push_back(s[k]);
        }
        t.emplace_back(x.first, -1);
        t.emplace_back(-1, x.second);
        rates.push_back(rec_ / 2.0);
        out.emplace_back(1.0, canon(t));
      }
    }
    double total = 0.0;
    for (double r : rates) total += r;
    for (std::size_t k = 0; k < out.size(); ++k) out[k].first *= rates[k] / total;
    return out;
  }

  // Recombination can revisit states, so solve by Gauss-Seidel sweeps over
  // the reachable set until the update is below 1e-15.
  double value(const State& start) {
    std::map<State, std::size_t> index;
    std::vector<State> states{start};
    index[start] = 0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (terminal(states[k])) continue;
      for (auto& [p, t] : moves(states[k])) {
        if (t && !index.count(*t)) {
          index[*t] = states.size();
          states.push_back(*t);
        }
      }
    }
    std::vector<std::vector<std::pair<double, std::size_t>>> rows(states.size());
    std::vector<double> f(states.size(), 0.0);
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (terminal(states[k])) {
        f[k] = weight(states[k]);
        continue;
      }
      for (auto& [p, t] : moves(states[k])) {
        if (t && p > 0.0) rows[k].emplace_back(p, index[*t]);
      }
    }
    for (int sweep = 0; sweep < 1'000'000; ++sweep) {
      double change = 0.0;
      for (std::size_t k = states.size(); k-- > 0;) {
        if (rows[k].empty()) continue;
        double v = 0.0;
        for (auto [p, t] : rows[k]) v += p * f[t];
        change = std::max(change, std::abs(v - f[k]));
        f[k] = v;
      }
      if (change < 1e-16) break;
    }
    return f[0];
  }

  std::vector<double> pi_[2];
  double u_[2];
  double rec_;
};

// Brute-force (-1)^{|B\A|} lattice sums.
inline std::vector<double> brute_superset_sum(const std::vector<double>& g) {
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = 0; b < g.size(); ++b) {
      if ((a & b) == a) out[a] += g[b];
    }
  }
  return out;
}

// Transitions as a map keyed by target, for exact rate-table comparison.
template <typename T>
std::map<ProcessState, double> rate_table(const std::vector<T>& transitions) {
  std::map<ProcessState, double> out;
  for (const auto& t : transitions) out[t.target] += t.rate;
  return out;
}

inline bool same_rates(const std::map<ProcessState, double>& a, const std::map<ProcessState, double>& b,
                       double tol = 1e-12) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (!(ia->first == ib->first)) return false;
    if (std::abs(ia->second - ib->second) > tol * std::max(1.0, std::abs(ib->second))) return false;
  }
  return true;
}

}  // namespace margsim::testing

#endif  // MARGSIM_TESTS_SUPPORT_HPP_
