#include <doctest.h>

#include "margsim/recombination.hpp"
#include "support.hpp"

using namespace margsim;
using margsim::testing::Engine;

namespace {

Partition P(std::initializer_list<std::initializer_list<int>> blocks) {
  std::vector<SiteSet> v;
  for (auto b : blocks) v.push_back(SiteSet::of(b));
  return Partition(v);
}

RecombinationSpec three_site(double r1, double r2, double rho = 1.0) {
  const double rates[] = {r1, r2};
  return single_crossover_preset(3, rates, rho);
}

}  // namespace

TEST_CASE("partition construction") {
  const Partition p = P({{1, 2}, {0}});
  REQUIRE(p.size() == 2);
  CHECK(p.blocks()[0] == SiteSet::of({0}));
  CHECK(p.ground() == SiteSet::of({0, 1, 2}));
  CHECK_THROWS_AS(P({{0, 1}, {1}}), PreconditionError);
  CHECK_THROWS_AS(Partition({SiteSet()}), PreconditionError);
}

TEST_CASE("induced") {
  const Partition p = P({{0}, {1, 2}});
  CHECK(induced(p, SiteSet::of({1, 2})) == P({{1, 2}}));
  CHECK(induced(p, SiteSet::of({0, 1})) == P({{0}, {1}}));
  const Partition trivial = Partition::trivial(SiteSet::full(4));
  CHECK(induced(trivial, SiteSet::of({1, 3})) == P({{1, 3}}));
  CHECK_THROWS_AS(induced(p, SiteSet()), PreconditionError);
}

TEST_CASE("rbar on the three-site single-crossover spec") {
  const double r1 = 0.7, r2 = 1.9;
  const auto spec = three_site(r1, r2);
  CHECK(rbar(spec, SiteSet::of({0, 1})) == doctest::Approx(r1).epsilon(1e-15));
  CHECK(rbar(spec, SiteSet::of({0, 2})) == doctest::Approx(r1 + r2).epsilon(1e-15));
  CHECK(rbar(spec, SiteSet::of({0, 1, 2})) == doctest::Approx(r1 + r2).epsilon(1e-15));
  CHECK(rbar(spec, SiteSet::of({1, 2})) == doctest::Approx(r2).epsilon(1e-15));
}

TEST_CASE("rbar rejects inseparable sets") {
  const RecombinationSpec spec(2, {{Partition::trivial(SiteSet::full(2)), 1.0}}, 1.0);
  CHECK_THROWS_AS(rbar(spec, SiteSet::of({0, 1})), InseparableSitesError);
  CHECK(rbar(spec, SiteSet::of({0})) == 0.0);
}

TEST_CASE("effective_split_rate") {
  const auto spec = three_site(0.5, 2.0, 100.0);
  CHECK(effective_split_rate(spec, SiteSet::of({1})).total == 0.0);
  CHECK(effective_split_rate(spec, SiteSet::of({0, 1})).total == doctest::Approx(50.0));
  CHECK(effective_split_rate(spec, SiteSet::full(3)).total == doctest::Approx(250.0));
  const SplitChannel ch = effective_split_rate(spec, SiteSet::full(3));
  CHECK(ch.terms.size() == 2);
  // u below the first term's share picks it.
  CHECK(ch.sample(0.1) == ch.terms[0]);
  CHECK(ch.sample(0.9) == ch.terms[1]);
}

TEST_CASE("single_crossover_preset") {
  const double one[] = {1.0};
  const auto s2 = single_crossover_preset(2, one);
  REQUIRE(s2.terms().size() == 1);
  CHECK(s2.terms()[0].partition == P({{0}, {1}}));
  CHECK(s2.terms()[0].rate == 1.0);
  const auto s3 = three_site(1.0, 2.0);
  REQUIRE(s3.terms().size() == 2);
  CHECK(s3.terms()[0].partition == P({{0}, {1, 2}}));
  CHECK(s3.terms()[1].partition == P({{0, 1}, {2}}));
  const double ones[] = {1.0, 1.0, 1.0};
  const auto s4 = single_crossover_preset(4, ones);
  CHECK(s4.terms().size() == 3);
  for (const auto& t : s4.terms()) CHECK(t.partition.size() == 2);
  CHECK_THROWS_AS(single_crossover_preset(3, one), PreconditionError);
}

TEST_CASE("duplicate partitions merge with a warning") {
  const RecombinationSpec spec(2, {{P({{0}, {1}}), 1.0}, {P({{1}, {0}}), 0.5}}, 1.0);
  REQUIRE(spec.terms().size() == 1);
  CHECK(spec.terms()[0].rate == 1.5);
  CHECK(spec.warnings().size() == 1);
}

TEST_CASE("separation_check") {
  const RecombinationSpec trivial(2, {{Partition::trivial(SiteSet::full(2)), 1.0}}, 1.0);
  const auto report = separation_check(trivial);
  CHECK_FALSE(report.ok());
  REQUIRE(report.inseparable.size() == 1);
  CHECK(report.inseparable[0] == std::pair{0, 1});
  CHECK(separation_check(three_site(1.0, 1.0)).ok());
  for (int n = 2; n <= 6; ++n) {
    const RecombinationSpec singles(n, {{Partition::singletons(SiteSet::full(n)), 0.3}}, 1.0);
    CHECK(separation_check(singles).ok());
  }
  // A zero crossover rate leaves the pair straddling it unsplit.
  const auto zero = three_site(1.0, 0.0);
  const auto r = separation_check(zero);
  REQUIRE(r.inseparable.size() == 1);
  CHECK(r.inseparable[0] == std::pair{1, 2});
}

TEST_CASE("property: induced partitions are partitions of B") {
  Engine g(21);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = testing::uniform_int(g, 1, 5);
    const Partition p = testing::random_partition(g, n);
    const SiteSet B = testing::random_nonempty_sites(g, n);
    const Partition q = induced(p, B);
    CHECK(q.ground() == B);
    // Restricting twice equals restricting to the intersection.
    const SiteSet C = testing::random_nonempty_sites(g, n) & B;
    if (!C.empty()) CHECK(induced(q, C) == induced(p, C));
  }
}

TEST_CASE("property: rbar monotone and matches brute force") {
  Engine g(22);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = testing::uniform_int(g, 2, 5);
    const RecombinationSpec spec = testing::random_spec(g, n);
    for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
      const SiteSet A = SiteSet::from_bits(bits);
      double brute = 0.0;
      for (const auto& t : spec.terms()) {
        if (induced(t.partition, A).size() > 1) brute += t.rate;
      }
      CHECK(spec.split_base_rate(A) == doctest::Approx(brute).epsilon(1e-14));
      for (int i = 0; i < n; ++i) {
        if (!A.contains(i)) CHECK(spec.split_base_rate(A) <= spec.split_base_rate(A.with(i)) + 1e-15);
      }
      if (A.size() >= 2) CHECK(effective_split_rate(spec.with_rho(37.0), A).total == doctest::Approx(37.0 * rbar(spec, A)));
    }
  }
}

TEST_CASE("property: single-crossover rbar is the sum of crossover rates inside the span") {
  Engine g(23);
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> rates;
    for (int k = 0; k < n - 1; ++k) rates.push_back(testing::uniform(g, 0.1, 2.0));
    const auto spec = single_crossover_preset(n, rates);
    for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
      const SiteSet A = SiteSet::from_bits(bits);
      if (A.size() < 2) continue;
      double expected = 0.0;
      for (int k = A.min(); k < A.max(); ++k) expected += rates[k];
      CHECK(rbar(spec, A) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}
