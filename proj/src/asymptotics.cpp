#include "margsim/asymptotics.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace margsim {
namespace {

constexpr double choose2(std::uint64_t m) { return m < 2 ? 0.0 : static_cast<double>(m * (m - 1) / 2); }

int sign(int exponent) { return exponent % 2 == 0 ? 1 : -1; }

void require_exact(const CountingMeasure& nu, const char* op) {
  if (!nu.all_exact()) throw PreconditionError(std::string(op) + ": sample must consist of exact types");
}

// Supersets of `base` within {0..n-1}, ascending by bit pattern.
template <typename F>
void for_each_superset(SiteSet base, int n, F&& f) {
  const std::uint32_t free = SiteSet::full(n).bits() & ~base.bits();
  std::uint32_t sub = 0;
  while (true) {
    f(SiteSet::from_bits(base.bits() | sub));
    if (sub == free) break;
    sub = (sub - free) & free;
  }
}

// Inner signed sum Σ_{A ⊇ d(x), |A| >= 2} (-1)^{|A \ d(x)|} C(ν^{⊇A,d(x)}(x), 2) / r̄_A.
double signed_pair_sum(const CountingMeasure& nu, const FuzzyType& x, const RecombinationSpec& spec) {
  const SiteSet dx = x.sites();
  double total = 0.0;
  for_each_superset(dx, spec.sites(), [&](SiteSet a) {
    if (a.size() < 2) return;
    const double pairs = choose2(superset_marginal_count(nu, a, x));
    if (pairs == 0.0) return;
    total += sign((a - dx).size()) * pairs / rbar(spec, a);
  });
  return total;
}

// g = Möbius inverse of G(A) = C(‖ν^{⊇A}‖, 2)/r̄_A on |A| >= 2.
SubsetFunction pair_density(const CountingMeasure& nu, const RecombinationSpec& spec) {
  SubsetFunction G(spec.sites());
  for (std::uint32_t bits = 0; bits < G.size(); ++bits) {
    const SiteSet a = SiteSet::from_bits(bits);
    if (a.size() < 2) continue;
    const double pairs = choose2(restrict_superset(nu, a).total_mass());
    if (pairs != 0.0) G[a] = pairs / rbar(spec, a);
  }
  return moebius_invert(G);
}

CountingMeasure single_site_part(const CountingMeasure& split, int site) {
  return restrict_superset(split, SiteSet::single(site));
}

}  // namespace

double pim_single_site_q(std::span<const std::uint32_t> counts, double rate, std::span<const double> row) {
  if (!(rate > 0.0)) throw PreconditionError("pim_single_site_q: mutation rate must be positive");
  if (counts.size() > row.size()) throw PreconditionError("pim_single_site_q: allele index out of range");
  // Interleave numerator and denominator factors to stay in range.
  double value = 1.0;
  std::uint64_t k = 0;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    const double theta = rate * row[a];
    for (std::uint32_t j = 0; j < counts[a]; ++j, ++k) value *= (theta + j) / (rate + static_cast<double>(k));
  }
  return value;
}

SingleSiteQ::SingleSiteQ(MutationModel mutation, Backend backend, std::size_t state_cap)
    : mutation_(std::move(mutation)), backend_(backend), state_cap_(state_cap) {
  for (int i = 0; i < mutation_.sites(); ++i) {
    const auto& k = mutation_.kernel(i);
    const bool pim = k.rate() > 0.0 && k.is_parent_independent();
    pim_.push_back(pim);
    if (backend_ == Backend::ClosedForm && !pim && k.alleles() > 1) {
      throw PreconditionError("closed-form single-site q needs parent-independent mutation at site " +
                              std::to_string(i));
    }
  }
}

double SingleSiteQ::operator()(int site, std::span<const std::uint32_t> counts) const {
  CountingMeasure nu;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] > 0) nu.add(FuzzyType().set(site, AlleleSet::single(static_cast<int>(a))), counts[a]);
  }
  return (*this)(site, nu);
}

double SingleSiteQ::operator()(int site, const CountingMeasure& nu_i) const {
  if (site < 0 || site >= mutation_.sites()) throw PreconditionError("single-site q: site out of range");
  if (nu_i.empty()) return 1.0;
  for (const auto& [x, c] : nu_i) {
    if (x.sites() != SiteSet::single(site)) throw PreconditionError("single-site q: particle not observed at site only");
  }
  const auto& kernel = mutation_.kernel(site);
  if (kernel.alleles() == 1) return 1.0;
  // One particle: q = π(candidate set).
  if (nu_i.total_mass() == 1) return mutation_.pi(site, nu_i.entries()[0].first.at(site));

  const bool closed_form = backend_ != Backend::Exact && pim_[site] && nu_i.all_exact();
  if (backend_ == Backend::ClosedForm && !closed_form) {
    throw PreconditionError("closed-form single-site q needs an exact-typed sample");
  }
  if (closed_form) {
    std::vector<std::uint32_t> counts(kernel.alleles(), 0);
    for (const auto& [x, c] : nu_i) counts[x.at(site).value()] += c;
    return pim_single_site_q(counts, kernel.rate(), mutation_.stationary(site));
  }

  const auto key = std::make_pair(site, nu_i);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double value = single_site_q(nu_i, mutation_, state_cap_);
  std::lock_guard lock(mutex_);
  cache_.emplace(key, value);
  return value;
}

double q_infty(const CountingMeasure& nu, const SingleSiteQ& ssq) {
  const CountingMeasure split = sigma(nu);
  double value = 1.0;
  for (int site : split.observed_sites()) value *= ssq(site, single_site_part(split, site));
  return value;
}

SubsetFunction::SubsetFunction(int sites) : sites_(sites) {
  if (sites < 0 || sites > kMaxSites) throw PreconditionError("subset function: site count out of range");
  values_.assign(std::size_t{1} << sites, 0.0);
}

SubsetFunction superset_sum(const SubsetFunction& g) {
  SubsetFunction G = g;
  auto v = G.values();
  for (int i = 0; i < g.sites(); ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t a = 0; a < v.size(); ++a) {
      if (!(a & bit)) v[a] += v[a | bit];
    }
  }
  return G;
}

SubsetFunction moebius_invert(const SubsetFunction& G) {
  SubsetFunction g = G;
  auto v = g.values();
  for (int i = 0; i < G.sites(); ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t a = 0; a < v.size(); ++a) {
      if (!(a & bit)) v[a] -= v[a | bit];
    }
  }
  return g;
}

std::uint64_t superset_marginal_count(const CountingMeasure& nu, SiteSet a, const FuzzyType& x) {
  if (!a.superset_of(x.sites())) throw PreconditionError("superset_marginal_count: A must contain d(x)");
  std::uint64_t count = 0;
  for (const auto& [y, c] : nu) {
    if (y.sites().superset_of(a) && marginal(y, x.sites()) == x) count += c;
  }
  return count;
}

double prob_F1x(const CountingMeasure& nu, const FuzzyType& x, const RecombinationSpec& spec) {
  require_exact(nu, "prob_F1x");
  if (x.sites().size() < 2) throw PreconditionError("prob_F1x: witness must be observed at two or more sites");
  return signed_pair_sum(nu, x, spec);
}

double prob_F1(const CountingMeasure& nu, const RecombinationSpec& spec) {
  require_exact(nu, "prob_F1");
  const SubsetFunction g = pair_density(nu, spec);
  double total = 0.0;
  for (std::uint32_t bits = 0; bits < g.size(); ++bits) {
    if (std::popcount(bits) >= 2) total += g.values()[bits];
  }
  return total;
}

double prob_F2(const CountingMeasure& nu, const RecombinationSpec& spec) {
  require_exact(nu, "prob_F2");
  const SubsetFunction g = pair_density(nu, spec);
  double total = 0.0;
  for (std::uint32_t bits = 0; bits < g.size(); ++bits) {
    const int size = std::popcount(bits);
    if (size >= 2) total += size * g.values()[bits];
  }
  return total;
}

double prob_F2ixi(const CountingMeasure& nu, int site, int allele, const RecombinationSpec& spec) {
  require_exact(nu, "prob_F2ixi");
  if (site < 0 || site >= spec.sites()) throw PreconditionError("prob_F2ixi: site out of range");
  const FuzzyType xi = FuzzyType().set(site, AlleleSet::single(allele));
  return -signed_pair_sum(nu, xi, spec);
}

std::vector<FuzzyType> f1_witnesses(const CountingMeasure& nu) {
  std::set<FuzzyType> out;
  for (const auto& [y, c] : nu) {
    const std::uint32_t d = y.sites().bits();
    for (std::uint32_t b = d;; b = (b - 1) & d) {
      if (std::popcount(b) >= 2) out.insert(marginal(y, SiteSet::from_bits(b)));
      if (b == 0) break;
    }
  }
  return {out.begin(), out.end()};
}

std::vector<std::pair<int, int>> f2_witnesses(const CountingMeasure& nu) {
  std::set<std::pair<int, int>> out;
  for (const auto& [y, c] : nu) {
    for (int i : y.sites()) {
      for (int a : y.at(i)) out.emplace(i, a);
    }
  }
  return {out.begin(), out.end()};
}

double q1(const CountingMeasure& nu, const RecombinationSpec& spec, const SingleSiteQ& ssq) {
  require_exact(nu, "q1");
  const CountingMeasure split = sigma(nu);
  std::set<FuzzyType> candidates;
  for (const auto& [y, c] : nu) {
    const std::uint32_t d = y.sites().bits();
    for (std::uint32_t b = d;; b = (b - 1) & d) {
      candidates.insert(marginal(y, SiteSet::from_bits(b)));
      if (b == 0) break;
    }
  }
  double total = 0.0;
  for (const FuzzyType& x : candidates) {
    const double inner = signed_pair_sum(nu, x, spec);
    if (inner == 0.0) continue;
    CountingMeasure x_measure;
    if (!x.is_empty_type()) x_measure.add(x);
    total += inner * q_infty(split - sigma(x_measure), ssq);
  }
  return total;
}

double q1_via_decomposition(const CountingMeasure& nu, const RecombinationSpec& spec, const SingleSiteQ& ssq) {
  require_exact(nu, "q1_via_decomposition");
  const CountingMeasure split = sigma(nu);
  double total = 0.0;
  for (const FuzzyType& x : f1_witnesses(nu)) {
    const double p = prob_F1x(nu, x, spec);
    if (p == 0.0) continue;
    total += p * q_infty(split - sigma(CountingMeasure{{x, 1}}), ssq);
  }
  for (const auto& [i, a] : f2_witnesses(nu)) {
    const double p = prob_F2ixi(nu, i, a, spec);
    if (p == 0.0) continue;
    total -= p * q_infty(split - CountingMeasure{{FuzzyType().set(i, AlleleSet::single(a)), 1}}, ssq);
  }
  const double f2_minus_f1 = prob_F2(nu, spec) - prob_F1(nu, spec);
  if (f2_minus_f1 != 0.0) total += f2_minus_f1 * q_infty(split, ssq);
  return total;
}

}  // namespace margsim
