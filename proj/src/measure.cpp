#include "margsim/measure.hpp"

#include <algorithm>
#include <cstring>
#include <ostream>
#include <sstream>

namespace margsim {

namespace {

auto lower(std::vector<CountingMeasure::Entry>& v, const FuzzyType& x) {
  return std::lower_bound(v.begin(), v.end(), x,
                          [](const CountingMeasure::Entry& e, const FuzzyType& t) { return e.first < t; });
}

std::size_t mix(std::size_t h, std::uint64_t v) {
  // splitmix64 finalizer folded into the running hash
  v += 0x9e3779b97f4a7c15ull + h;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
  return static_cast<std::size_t>(v ^ (v >> 31));
}

}  // namespace

CountingMeasure::CountingMeasure(std::initializer_list<Entry> entries) {
  for (const auto& [x, c] : entries) add(x, c);
}

void CountingMeasure::add(const FuzzyType& x, std::uint32_t count) {
  if (count == 0) return;
  auto it = lower(entries_, x);
  if (it != entries_.end() && it->first == x) {
    it->second += count;
  } else {
    entries_.insert(it, {x, count});
  }
}

void CountingMeasure::remove(const FuzzyType& x, std::uint32_t count) {
  if (count == 0) return;
  auto it = lower(entries_, x);
  if (it == entries_.end() || !(it->first == x) || it->second < count) {
    throw PreconditionError("CountingMeasure::remove: not enough mass at " + x.to_string());
  }
  it->second -= count;
  if (it->second == 0) entries_.erase(it);
}

std::uint32_t CountingMeasure::count(const FuzzyType& x) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), x,
                             [](const Entry& e, const FuzzyType& t) { return e.first < t; });
  return (it != entries_.end() && it->first == x) ? it->second : 0;
}

std::uint64_t CountingMeasure::total_mass() const {
  std::uint64_t m = 0;
  for (const auto& e : entries_) m += e.second;
  return m;
}

std::uint64_t CountingMeasure::site_observations() const {
  std::uint64_t m = 0;
  for (const auto& [x, c] : entries_) m += static_cast<std::uint64_t>(c) * x.sites().size();
  return m;
}

SiteSet CountingMeasure::observed_sites() const {
  SiteSet s;
  for (const auto& e : entries_) s = s | e.first.sites();
  return s;
}

bool CountingMeasure::contains_empty_type() const {
  return !entries_.empty() && entries_.front().first.is_empty_type();
}

bool CountingMeasure::all_exact() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Entry& e) { return e.first.is_exact(); });
}

bool CountingMeasure::all_single_site() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Entry& e) { return e.first.sites().size() == 1; });
}

CountingMeasure& CountingMeasure::operator+=(const CountingMeasure& other) {
  for (const auto& [x, c] : other.entries_) add(x, c);
  return *this;
}

CountingMeasure& CountingMeasure::operator-=(const CountingMeasure& other) {
  for (const auto& [x, c] : other.entries_) {
    if (count(x) < c) throw PreconditionError("CountingMeasure: subtraction below zero at " + x.to_string());
  }
  for (const auto& [x, c] : other.entries_) remove(x, c);
  return *this;
}

std::string CountingMeasure::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::size_t CountingMeasureHash::operator()(const CountingMeasure& m) const noexcept {
  std::size_t h = m.support_size();
  for (const auto& [x, c] : m) {
    std::uint64_t word = x.sites().bits();
    for (int i : x.sites()) word = word * 257u + x.at(i).bits();
    h = mix(h, word);
    h = mix(h, c);
  }
  return h;
}

CountingMeasure restrict_superset(const CountingMeasure& nu, SiteSet sites) {
  CountingMeasure out;
  for (const auto& [x, c] : nu) {
    if (x.sites().superset_of(sites)) out.add(x, c);
  }
  return out;
}

CountingMeasure marginal_measure(const CountingMeasure& nu, SiteSet sites) {
  CountingMeasure out;
  for (const auto& [x, c] : nu) out.add(marginal(x, sites), c);
  return out;
}

CountingMeasure sigma(const CountingMeasure& nu) {
  CountingMeasure out;
  for (const auto& [x, c] : nu) {
    for (int i : x.sites()) out.add(marginal(x, SiteSet::single(i)), c);
  }
  return out;
}

bool is_simple(const CountingMeasure& nu) {
  // Entries are sorted by observation set first, so a repeated set shows up
  // as adjacent entries; any other overlap shows up against the union.
  SiteSet seen;
  SiteSet previous;
  bool first = true;
  for (const auto& [x, c] : nu) {
    if (c > 1) return false;
    if (!first && x.sites() == previous) return false;
    if (seen.intersects(x.sites())) return false;
    seen = seen | x.sites();
    previous = x.sites();
    first = false;
  }
  return true;
}

std::vector<std::uint32_t> site_allele_counts(const CountingMeasure& nu, int site) {
  std::vector<std::uint32_t> counts;
  for (const auto& [x, c] : nu) {
    if (!x.sites().contains(site)) continue;
    int a = x.at(site).value();
    if (static_cast<int>(counts.size()) <= a) counts.resize(a + 1, 0);
    counts[a] += c;
  }
  return counts;
}

const CountingMeasure& ProcessState::measure() const {
  if (cemetery_) throw PreconditionError("ProcessState::measure on cemetery");
  return measure_;
}

CountingMeasure& ProcessState::measure() {
  if (cemetery_) throw PreconditionError("ProcessState::measure on cemetery");
  return measure_;
}

std::string ProcessState::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::size_t ProcessStateHash::operator()(const ProcessState& s) const noexcept {
  if (s.is_cemetery()) return 0x5bd1e995u;
  return CountingMeasureHash{}(s.measure());
}

std::ostream& operator<<(std::ostream& os, const CountingMeasure& nu) {
  if (nu.empty()) return os << "0";
  bool first = true;
  for (const auto& [x, c] : nu) {
    if (!first) os << " + ";
    first = false;
    if (c != 1) os << c;
    os << x;
  }
  return os;
}

std::ostream& operator<<(std::ostream& os, const ProcessState& s) {
  if (s.is_cemetery()) return os << "Delta";
  return os << s.measure();
}

}  // namespace margsim
