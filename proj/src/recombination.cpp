#include "margsim/recombination.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace margsim {

Partition::Partition(std::vector<SiteSet> blocks) : blocks_(std::move(blocks)) {
  SiteSet seen;
  for (SiteSet b : blocks_) {
    if (b.empty()) throw PreconditionError("Partition: empty block");
    if (seen.intersects(b)) throw PreconditionError("Partition: overlapping blocks");
    seen = seen | b;
  }
  ground_ = seen;
  std::sort(blocks_.begin(), blocks_.end(), [](SiteSet a, SiteSet b) { return a.min() < b.min(); });
}

Partition Partition::trivial(SiteSet ground) {
  if (ground.empty()) return Partition{};
  return Partition({ground});
}

Partition Partition::singletons(SiteSet ground) {
  std::vector<SiteSet> blocks;
  for (int i : ground) blocks.push_back(SiteSet::single(i));
  return Partition(std::move(blocks));
}

bool Partition::splits(SiteSet sites) const {
  int hit = 0;
  for (SiteSet b : blocks_) {
    if (b.intersects(sites) && ++hit > 1) return true;
  }
  return false;
}

std::string Partition::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (k) os << ',';
    os << blocks_[k];
  }
  os << '}';
  return os.str();
}

Partition induced(const Partition& partition, SiteSet sites) {
  if (sites.empty()) throw PreconditionError("induced: empty site set");
  std::vector<SiteSet> blocks;
  for (SiteSet b : partition.blocks()) {
    SiteSet c = b & sites;
    if (!c.empty()) blocks.push_back(c);
  }
  return Partition(std::move(blocks));
}

RecombinationSpec::RecombinationSpec(int sites, std::vector<RecombinationTerm> terms, double rho)
    : sites_(sites), rho_(rho) {
  if (sites < 1 || sites > kMaxSites) throw PreconditionError("RecombinationSpec: site count out of range");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw PreconditionError("RecombinationSpec: rho must be positive");
  const SiteSet all = SiteSet::full(sites);
  for (auto& t : terms) {
    if (!(t.rate >= 0.0) || !std::isfinite(t.rate)) {
      throw PreconditionError("RecombinationSpec: negative rate for " + t.partition.to_string());
    }
    if (t.partition.ground() != all) {
      throw PreconditionError("RecombinationSpec: " + t.partition.to_string() + " is not a partition of " +
                              all.to_string());
    }
    auto it = std::find_if(terms_.begin(), terms_.end(),
                           [&](const RecombinationTerm& u) { return u.partition == t.partition; });
    if (it != terms_.end()) {
      it->rate += t.rate;
      warnings_.push_back("duplicate partition " + t.partition.to_string() + " merged");
    } else {
      terms_.push_back(std::move(t));
    }
  }

  auto cache = std::make_shared<Cache>();
  const std::size_t subsets = std::size_t{1} << sites;
  cache->base_rate.assign(subsets, 0.0);
  cache->splitting.resize(subsets);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    SiteSet d = SiteSet::from_bits(static_cast<std::uint32_t>(mask));
    for (std::uint32_t k = 0; k < terms_.size(); ++k) {
      if (terms_[k].rate > 0.0 && terms_[k].partition.splits(d)) {
        cache->splitting[mask].push_back(k);
        cache->base_rate[mask] += terms_[k].rate;
      }
    }
  }
  cache_ = std::move(cache);
}

RecombinationSpec RecombinationSpec::with_rho(double rho) const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw PreconditionError("RecombinationSpec: rho must be positive");
  RecombinationSpec copy = *this;
  copy.rho_ = rho;
  return copy;
}

double rbar(const RecombinationSpec& spec, SiteSet sites) {
  const double r = spec.split_base_rate(sites);
  if (sites.size() >= 2 && !(r > 0.0)) {
    throw InseparableSitesError("inseparable sites: r̄ = 0 for " + sites.to_string());
  }
  return r;
}

std::uint32_t SplitChannel::sample(double u) const {
  if (terms.empty()) throw PreconditionError("SplitChannel::sample on silent channel");
  double target = u * (total / spec->rho());
  for (std::uint32_t k : terms) {
    target -= spec->terms()[k].rate;
    if (target < 0.0) return k;
  }
  return terms.back();
}

SplitChannel effective_split_rate(const RecombinationSpec& spec, SiteSet sites) {
  if (sites.empty()) throw PreconditionError("effective_split_rate: empty site set");
  SplitChannel ch;
  ch.spec = &spec;
  ch.terms = spec.split_terms(sites);
  ch.total = spec.rho() * spec.split_base_rate(sites);
  return ch;
}

RecombinationSpec single_crossover_preset(int sites, std::span<const double> rates, double rho) {
  if (sites < 2) throw PreconditionError("single_crossover_preset: need at least two sites");
  if (static_cast<int>(rates.size()) != sites - 1) {
    throw PreconditionError("single_crossover_preset: expected n-1 crossover rates");
  }
  std::vector<RecombinationTerm> terms;
  for (int k = 0; k + 1 < sites; ++k) {
    SiteSet left = SiteSet::full(k + 1);
    SiteSet right = SiteSet::full(sites) - left;
    terms.push_back({Partition({left, right}), rates[k]});
  }
  return RecombinationSpec(sites, std::move(terms), rho);
}

std::string SeparationReport::describe() const {
  std::ostringstream os;
  os << "inseparable site pairs:";
  for (const auto& [i, j] : inseparable) os << " (" << i << ',' << j << ')';
  return os.str();
}

SeparationReport separation_check(const RecombinationSpec& spec) {
  SeparationReport report;
  for (int i = 0; i < spec.sites(); ++i) {
    for (int j = i + 1; j < spec.sites(); ++j) {
      if (!(spec.split_base_rate(SiteSet::of({i, j})) > 0.0)) report.inseparable.emplace_back(i, j);
    }
  }
  return report;
}

}  // namespace margsim
