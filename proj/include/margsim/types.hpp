#ifndef MARGSIM_TYPES_HPP_
#define MARGSIM_TYPES_HPP_

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <utility>

#include "margsim/errors.hpp"

namespace margsim {

inline constexpr int kMaxSites = 16;
inline constexpr int kMaxAlleles = 8;

// Iterates the set bits of a word in ascending order.
template <typename Word>
class BitIterator {
 public:
  using value_type = int;
  using difference_type = std::ptrdiff_t;

  constexpr BitIterator() = default;
  constexpr explicit BitIterator(Word bits) : bits_(bits) {}

  constexpr int operator*() const { return std::countr_zero(static_cast<unsigned>(bits_)); }
  constexpr BitIterator& operator++() {
    bits_ = static_cast<Word>(bits_ & (bits_ - 1));
    return *this;
  }
  constexpr BitIterator operator++(int) {
    BitIterator old = *this;
    ++*this;
    return old;
  }
  constexpr bool operator==(const BitIterator&) const = default;

 private:
  Word bits_ = 0;
};

// A subset of the sites 0..n-1, n <= 16.
class SiteSet {
 public:
  constexpr SiteSet() = default;

  static constexpr SiteSet from_bits(std::uint32_t bits) {
    if (bits >> kMaxSites) throw PreconditionError("SiteSet: site index out of range");
    SiteSet s;
    s.bits_ = static_cast<std::uint16_t>(bits);
    return s;
  }
  static constexpr SiteSet single(int site) {
    check_site(site);
    return from_bits(1u << site);
  }
  static constexpr SiteSet full(int n) {
    if (n < 0 || n > kMaxSites) throw PreconditionError("SiteSet: site count out of range");
    return from_bits(n == 0 ? 0u : ((1u << n) - 1u));
  }
  static constexpr SiteSet of(std::initializer_list<int> sites) {
    std::uint32_t bits = 0;
    for (int s : sites) {
      check_site(s);
      bits |= 1u << s;
    }
    return from_bits(bits);
  }

  constexpr std::uint16_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool contains(int site) const {
    return site >= 0 && site < kMaxSites && ((bits_ >> site) & 1u);
  }
  // Smallest site; precondition nonempty.
  constexpr int min() const {
    if (empty()) throw PreconditionError("SiteSet::min on empty set");
    return std::countr_zero(bits_);
  }
  constexpr int max() const {
    if (empty()) throw PreconditionError("SiteSet::max on empty set");
    return 15 - std::countl_zero(bits_);
  }
  constexpr bool subset_of(SiteSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr bool superset_of(SiteSet other) const { return other.subset_of(*this); }
  constexpr bool intersects(SiteSet other) const { return (bits_ & other.bits_) != 0; }

  constexpr SiteSet with(int site) const { return from_bits(bits_ | single(site).bits_); }
  constexpr SiteSet without(int site) const { return from_bits(bits_ & ~single(site).bits_); }

  friend constexpr SiteSet operator&(SiteSet a, SiteSet b) { return from_bits(a.bits_ & b.bits_); }
  friend constexpr SiteSet operator|(SiteSet a, SiteSet b) { return from_bits(a.bits_ | b.bits_); }
  // Set difference.
  friend constexpr SiteSet operator-(SiteSet a, SiteSet b) {
    return from_bits(a.bits_ & ~b.bits_);
  }

  constexpr BitIterator<std::uint16_t> begin() const { return BitIterator<std::uint16_t>(bits_); }
  constexpr BitIterator<std::uint16_t> end() const { return BitIterator<std::uint16_t>(0); }

  constexpr auto operator<=>(const SiteSet&) const = default;

  std::string to_string() const;

 private:
  static constexpr void check_site(int site) {
    if (site < 0 || site >= kMaxSites) throw PreconditionError("SiteSet: site index out of range");
  }

  std::uint16_t bits_ = 0;
};

// The candidate alleles of one site: a subset of 0..|X_i|-1, |X_i| <= 8.
// As part of a FuzzyType an AlleleSet is always nonempty; the empty set is
// only produced transiently by mutation preimages to signal impossibility.
class AlleleSet {
 public:
  constexpr AlleleSet() = default;

  static constexpr AlleleSet from_bits(std::uint32_t bits) {
    if (bits >> kMaxAlleles) throw PreconditionError("AlleleSet: allele index out of range");
    AlleleSet a;
    a.bits_ = static_cast<std::uint8_t>(bits);
    return a;
  }
  static constexpr AlleleSet single(int allele) {
    check_allele(allele);
    return from_bits(1u << allele);
  }
  static constexpr AlleleSet all(int count) {
    if (count < 1 || count > kMaxAlleles) throw PreconditionError("AlleleSet: allele count out of range");
    return from_bits((1u << count) - 1u);
  }
  static constexpr AlleleSet of(std::initializer_list<int> alleles) {
    std::uint32_t bits = 0;
    for (int a : alleles) {
      check_allele(a);
      bits |= 1u << a;
    }
    return from_bits(bits);
  }

  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool is_singleton() const { return size() == 1; }
  constexpr bool contains(int allele) const {
    return allele >= 0 && allele < kMaxAlleles && ((bits_ >> allele) & 1u);
  }
  // Index of the unique allele; precondition singleton.
  constexpr int value() const {
    if (!is_singleton()) throw PreconditionError("AlleleSet::value on non-singleton");
    return std::countr_zero(bits_);
  }
  constexpr bool intersects(AlleleSet other) const { return (bits_ & other.bits_) != 0; }
  constexpr bool subset_of(AlleleSet other) const { return (bits_ & ~other.bits_) == 0; }

  constexpr AlleleSet with(int allele) const { return from_bits(bits_ | single(allele).bits_); }
  constexpr AlleleSet without(int allele) const { return from_bits(bits_ & ~single(allele).bits_); }

  friend constexpr AlleleSet operator&(AlleleSet a, AlleleSet b) { return from_bits(a.bits_ & b.bits_); }
  friend constexpr AlleleSet operator|(AlleleSet a, AlleleSet b) { return from_bits(a.bits_ | b.bits_); }

  constexpr BitIterator<std::uint8_t> begin() const { return BitIterator<std::uint8_t>(bits_); }
  constexpr BitIterator<std::uint8_t> end() const { return BitIterator<std::uint8_t>(0); }

  constexpr auto operator<=>(const AlleleSet&) const = default;

 private:
  static constexpr void check_allele(int allele) {
    if (allele < 0 || allele >= kMaxAlleles) throw PreconditionError("AlleleSet: allele index out of range");
  }

  std::uint8_t bits_ = 0;
};

// A partial genotype whose entry at each observed site is a nonempty set of
// acceptable alleles. Alleles are always addressed as (site, index), so
// alleles of different sites cannot be confused. Exact types are the fuzzy
// types whose entries are all singletons; the default value is the empty
// type (observed nowhere).
class FuzzyType {
 public:
  constexpr FuzzyType() = default;

  // Exact type from (site, allele) pairs.
  static FuzzyType exact(std::initializer_list<std::pair<int, int>> entries);

  constexpr SiteSet sites() const { return sites_; }
  constexpr bool is_empty_type() const { return sites_.empty(); }
  bool is_exact() const;

  // Candidate alleles at an observed site.
  AlleleSet at(int site) const {
    if (!sites_.contains(site)) throw PreconditionError("FuzzyType::at: site not observed");
    return alleles_[site];
  }

  // Sets (or adds) the entry at a site; the allele set must be nonempty.
  FuzzyType& set(int site, AlleleSet alleles);

  constexpr auto operator<=>(const FuzzyType&) const = default;

  std::string to_string() const;

 private:
  SiteSet sites_;
  // Entries for unobserved sites stay empty, which keeps comparison canonical.
  std::array<AlleleSet, kMaxSites> alleles_{};
};

// x restricted to the sites in B (result observed at d(x) ∩ B).
FuzzyType marginal(const FuzzyType& x, SiteSet sites);

// Candidate sets intersect at every shared site; vacuous if none shared.
bool compatible(const FuzzyType& x, const FuzzyType& y);

// Candidates from either side, intersected on shared sites. Throws
// PreconditionError for incompatible inputs.
FuzzyType join(const FuzzyType& x, const FuzzyType& y);

std::ostream& operator<<(std::ostream& os, SiteSet s);
std::ostream& operator<<(std::ostream& os, const FuzzyType& x);

}  // namespace margsim

#endif  // MARGSIM_TYPES_HPP_
