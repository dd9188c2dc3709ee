#ifndef MARGSIM_ASYMPTOTICS_HPP_
#define MARGSIM_ASYMPTOTICS_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "margsim/exact_solver.hpp"
#include "margsim/measure.hpp"
#include "margsim/model.hpp"

namespace margsim {

// Ascending-factorial closed form for parent-independent mutation:
// Π_a (u·M(a))_{k_a↑} / (u)_{n↑}. `counts` is indexed by allele.
double pim_single_site_q(std::span<const std::uint32_t> counts, double rate, std::span<const double> row);

// Single-site sampling probabilities q(ν^{i}) per site, memoized. Safe to
// share across threads.
class SingleSiteQ {
 public:
  enum class Backend {
    Auto,        // closed form for parent-independent sites, else exact
    ClosedForm,  // refuses non-PIM sites
    Exact,       // split-chain absorption solve
  };

  explicit SingleSiteQ(MutationModel mutation, Backend backend = Backend::Auto,
                       std::size_t state_cap = kDefaultStateCap);

  const MutationModel& mutation() const { return mutation_; }
  Backend backend() const { return backend_; }

  // Exact single-site sample at `site`, counts indexed by allele.
  double operator()(int site, std::span<const std::uint32_t> counts) const;
  // Any measure of single-site (possibly fuzzy) types observed at `site`.
  // The empty measure gives 1.
  double operator()(int site, const CountingMeasure& nu_i) const;

 private:
  MutationModel mutation_;
  Backend backend_;
  std::size_t state_cap_;
  std::vector<bool> pim_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, CountingMeasure>, double> cache_;
};

// q_∞(ν) = Π_i q(σ(ν)^{i}).
double q_infty(const CountingMeasure& nu, const SingleSiteQ& ssq);

// A real value for every A ⊆ {0..n-1}, indexed by the bit pattern of A.
class SubsetFunction {
 public:
  explicit SubsetFunction(int sites);

  int sites() const { return sites_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](SiteSet a) { return values_[a.bits()]; }
  double operator[](SiteSet a) const { return values_[a.bits()]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  int sites_;
  std::vector<double> values_;
};

// G(A) = Σ_{B ⊇ A} g(B).
SubsetFunction superset_sum(const SubsetFunction& g);
// g(A) = Σ_{B ⊇ A} (-1)^{|B \ A|} G(B); inverse of superset_sum.
SubsetFunction moebius_invert(const SubsetFunction& G);

// ν^{⊇A, d(x)}(x): particles observed at a superset of A whose marginal on
// d(x) equals x. Requires A ⊇ d(x).
std::uint64_t superset_marginal_count(const CountingMeasure& nu, SiteSet a, const FuzzyType& x);

// Leading ρ⁻¹ coefficients of the coupling-event probabilities. ν must be
// exact-typed and the spec separating.
double prob_F1x(const CountingMeasure& nu, const FuzzyType& x, const RecombinationSpec& spec);
double prob_F1(const CountingMeasure& nu, const RecombinationSpec& spec);
double prob_F2ixi(const CountingMeasure& nu, int site, int allele, const RecombinationSpec& spec);
double prob_F2(const CountingMeasure& nu, const RecombinationSpec& spec);

// Candidate witnesses with a possibly nonzero coefficient: marginals of the
// sampled types on at least two sites, and the observed (site, allele) pairs.
std::vector<FuzzyType> f1_witnesses(const CountingMeasure& nu);
std::vector<std::pair<int, int>> f2_witnesses(const CountingMeasure& nu);

// First-order coefficient q₁ of q = q_∞ + ρ⁻¹q₁ + O(ρ⁻²), as the signed
// sum over marginals of sampled types and ε.
double q1(const CountingMeasure& nu, const RecombinationSpec& spec, const SingleSiteQ& ssq);
// The same coefficient assembled from the event probabilities.
double q1_via_decomposition(const CountingMeasure& nu, const RecombinationSpec& spec, const SingleSiteQ& ssq);

}  // namespace margsim

#endif  // MARGSIM_ASYMPTOTICS_HPP_
