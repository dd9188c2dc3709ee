#ifndef MARGSIM_RECOMBINATION_HPP_
#define MARGSIM_RECOMBINATION_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "margsim/types.hpp"

namespace margsim {

// A set partition: nonempty pairwise-disjoint blocks, sorted by their
// smallest element. The ground set is the union of the blocks.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<SiteSet> blocks);

  static Partition trivial(SiteSet ground);
  static Partition singletons(SiteSet ground);

  std::span<const SiteSet> blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  SiteSet ground() const { return ground_; }

  // True when the induced partition on `sites` has more than one block,
  // i.e. a recombination by this partition fragments a particle observed
  // at `sites`.
  bool splits(SiteSet sites) const;

  bool operator==(const Partition&) const = default;
  auto operator<=>(const Partition&) const = default;

  std::string to_string() const;

 private:
  std::vector<SiteSet> blocks_;
  SiteSet ground_;
};

// {A ∩ B : A ∈ 𝒜} \ {∅}. B must be nonempty.
Partition induced(const Partition& partition, SiteSet sites);

struct RecombinationTerm {
  Partition partition;
  double rate = 0.0;  // base rate r_𝒜; the event rate is rho * rate
};

// Weighted partitions of S = {0..n-1} and the global strength rho.
// Non-silent channels are precomputed for every subset of S at
// construction, so lookups are lock-free and O(1).
class RecombinationSpec {
 public:
  RecombinationSpec() : RecombinationSpec(1, {}, 1.0) {}
  // Duplicate partitions are merged by summing their rates; a warning is
  // recorded for each merge.
  RecombinationSpec(int sites, std::vector<RecombinationTerm> terms, double rho = 1.0);

  int sites() const { return sites_; }
  double rho() const { return rho_; }
  std::span<const RecombinationTerm> terms() const { return terms_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  RecombinationSpec with_rho(double rho) const;

  // Σ r_𝒜 over partitions splitting A (per unit rho).
  double split_base_rate(SiteSet sites) const { return cache_->base_rate[sites.bits()]; }
  // Indices into terms() of the partitions splitting A.
  std::span<const std::uint32_t> split_terms(SiteSet sites) const {
    return cache_->splitting[sites.bits()];
  }

 private:
  struct Cache {
    std::vector<double> base_rate;
    std::vector<std::vector<std::uint32_t>> splitting;
  };

  int sites_ = 1;
  double rho_ = 1.0;
  std::vector<RecombinationTerm> terms_;
  std::vector<std::string> warnings_;
  std::shared_ptr<const Cache> cache_;
};

// Raised when r̄_A = 0 for |A| >= 2.
class InseparableSitesError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Total fragmentation rate r̄_A per unit rho. Throws InseparableSitesError
// for |A| >= 2 with r̄_A = 0.
double rbar(const RecombinationSpec& spec, SiteSet sites);

// The non-silent recombination channel of a particle observed at D.
struct SplitChannel {
  double total = 0.0;  // rho * r̄_D, zero when |D| = 1
  std::span<const std::uint32_t> terms;
  const RecombinationSpec* spec = nullptr;

  // Picks a term index proportionally to its rate; u in [0, 1).
  std::uint32_t sample(double u) const;
};

SplitChannel effective_split_rate(const RecombinationSpec& spec, SiteSet sites);

// Partitions {{0..k},{k+1..n-1}} with base rate rates[k], k = 0..n-2.
RecombinationSpec single_crossover_preset(int sites, std::span<const double> rates, double rho = 1.0);

struct SeparationReport {
  std::vector<std::pair<int, int>> inseparable;
  bool ok() const { return inseparable.empty(); }
  std::string describe() const;
};

// Every unordered site pair must be split by some positive-rate partition.
SeparationReport separation_check(const RecombinationSpec& spec);

}  // namespace margsim

#endif  // MARGSIM_RECOMBINATION_HPP_
