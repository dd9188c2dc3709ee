#include "margsim/types.hpp"

#include <ostream>
#include <sstream>

namespace margsim {

std::string SiteSet::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

FuzzyType FuzzyType::exact(std::initializer_list<std::pair<int, int>> entries) {
  FuzzyType x;
  for (const auto& [site, allele] : entries) x.set(site, AlleleSet::single(allele));
  return x;
}

bool FuzzyType::is_exact() const {
  for (int i : sites_) {
    if (!alleles_[i].is_singleton()) return false;
  }
  return true;
}

FuzzyType& FuzzyType::set(int site, AlleleSet alleles) {
  if (alleles.empty()) throw PreconditionError("FuzzyType::set: empty allele set");
  sites_ = sites_.with(site);
  alleles_[site] = alleles;
  return *this;
}

std::string FuzzyType::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

FuzzyType marginal(const FuzzyType& x, SiteSet sites) {
  FuzzyType y;
  for (int i : x.sites() & sites) y.set(i, x.at(i));
  return y;
}

bool compatible(const FuzzyType& x, const FuzzyType& y) {
  for (int i : x.sites() & y.sites()) {
    if (!x.at(i).intersects(y.at(i))) return false;
  }
  return true;
}

FuzzyType join(const FuzzyType& x, const FuzzyType& y) {
  if (!compatible(x, y)) throw PreconditionError("join: incompatible types");
  FuzzyType z = x;
  for (int i : y.sites()) {
    z.set(i, x.sites().contains(i) ? (x.at(i) & y.at(i)) : y.at(i));
  }
  return z;
}

std::ostream& operator<<(std::ostream& os, SiteSet s) {
  os << '{';
  bool first = true;
  for (int i : s) {
    if (!first) os << ',';
    os << i;
    first = false;
  }
  return os << '}';
}

std::ostream& operator<<(std::ostream& os, const FuzzyType& x) {
  if (x.is_empty_type()) return os << "eps";
  os << '(';
  bool first = true;
  for (int i : x.sites()) {
    if (!first) os << ' ';
    first = false;
    os << i << ':';
    AlleleSet a = x.at(i);
    if (a.is_singleton()) {
      os << a.value();
    } else {
      os << '{';
      bool f2 = true;
      for (int v : a) {
        if (!f2) os << ',';
        os << v;
        f2 = false;
      }
      os << '}';
    }
  }
  return os << ')';
}

}  // namespace margsim
