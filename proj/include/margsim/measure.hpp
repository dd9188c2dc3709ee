#ifndef MARGSIM_MEASURE_HPP_
#define MARGSIM_MEASURE_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "margsim/types.hpp"

namespace margsim {

// Finite multiset of fuzzy types. Entries are kept sorted by type, so two
// measures holding the same multiset are representation-identical no matter
// how they were built.
class CountingMeasure {
 public:
  using Entry = std::pair<FuzzyType, std::uint32_t>;

  CountingMeasure() = default;
  CountingMeasure(std::initializer_list<Entry> entries);

  void add(const FuzzyType& x, std::uint32_t count = 1);
  // Removes `count` copies of x; throws PreconditionError if fewer present.
  void remove(const FuzzyType& x, std::uint32_t count = 1);

  std::uint32_t count(const FuzzyType& x) const;
  // ‖ν‖.
  std::uint64_t total_mass() const;
  // Σ_x ν(x)·|d(x)|, the number of (particle, observed site) pairs.
  std::uint64_t site_observations() const;
  // Union of d(x) over the support.
  SiteSet observed_sites() const;

  bool empty() const { return entries_.empty(); }
  std::size_t support_size() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool contains_empty_type() const;
  bool all_exact() const;
  bool all_single_site() const;

  CountingMeasure& operator+=(const CountingMeasure& other);
  friend CountingMeasure operator+(CountingMeasure a, const CountingMeasure& b) { return a += b; }
  // Pointwise subtraction; throws PreconditionError if it would go negative.
  CountingMeasure& operator-=(const CountingMeasure& other);
  friend CountingMeasure operator-(CountingMeasure a, const CountingMeasure& b) { return a -= b; }

  bool operator==(const CountingMeasure&) const = default;
  auto operator<=>(const CountingMeasure&) const = default;

  std::string to_string() const;

 private:
  std::vector<Entry> entries_;
};

struct CountingMeasureHash {
  std::size_t operator()(const CountingMeasure& m) const noexcept;
};

// ν^{⊇A}: the entries observed at a superset of A.
CountingMeasure restrict_superset(const CountingMeasure& nu, SiteSet sites);

// ν^B: pushforward under x ↦ x|_B. For B = ∅ (or B disjoint from all
// observation sets) the whole mass lands on the empty type.
CountingMeasure marginal_measure(const CountingMeasure& nu, SiteSet sites);

// Replaces every particle by its single-site fragments.
CountingMeasure sigma(const CountingMeasure& nu);

// Observation sets pairwise equal-or-disjoint and each carrying mass <= 1.
bool is_simple(const CountingMeasure& nu);

// Per-allele counts of σ(ν) at one site, for exact-typed ν. The vector has
// one slot per allele index up to the largest index present.
std::vector<std::uint32_t> site_allele_counts(const CountingMeasure& nu, int site);

// A state of the ancestral chains: a counting measure or the cemetery Δ.
class ProcessState {
 public:
  ProcessState() = default;
  explicit ProcessState(CountingMeasure measure) : measure_(std::move(measure)) {}

  static ProcessState cemetery() {
    ProcessState s;
    s.cemetery_ = true;
    return s;
  }

  bool is_cemetery() const { return cemetery_; }
  // Precondition: not the cemetery.
  const CountingMeasure& measure() const;
  CountingMeasure& measure();

  // Simple or Δ.
  bool is_terminal() const { return cemetery_ || is_simple(measure_); }

  bool operator==(const ProcessState&) const = default;
  auto operator<=>(const ProcessState&) const = default;

  std::string to_string() const;

 private:
  bool cemetery_ = false;
  CountingMeasure measure_;
};

struct ProcessStateHash {
  std::size_t operator()(const ProcessState& s) const noexcept;
};

std::ostream& operator<<(std::ostream& os, const CountingMeasure& nu);
std::ostream& operator<<(std::ostream& os, const ProcessState& s);

}  // namespace margsim

#endif  // MARGSIM_MEASURE_HPP_
