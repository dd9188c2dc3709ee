#ifndef MARGSIM_MONTECARLO_HPP_
#define MARGSIM_MONTECARLO_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "margsim/asymptotics.hpp"
#include "margsim/simulate.hpp"

namespace margsim {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  void add(const CompensatedSum& other);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Sufficient statistics of a sample of reals; merging is order-sensitive
// only through rounding, and merges always happen in block order.
struct Moments {
  std::uint64_t count = 0;
  CompensatedSum sum;
  CompensatedSum sum_squares;
  double min = 0.0;
  double max = 0.0;

  void add(double x);
  void merge(const Moments& other);
  double mean() const;
  // sample-std / √count; exactly 0 when all values are equal.
  double standard_error() const;
};

struct McOptions {
  std::uint64_t reps = 100'000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: MARGSIM_THREADS, else hardware concurrency
  std::uint64_t block_size = 4096;
  SimOptions sim;
};

// Worker count for `requested` (0 resolves from the environment).
unsigned resolve_threads(unsigned requested);

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

// E[q(R_T)] from independent finite-rho runs at the model's rho.
Estimate estimate_q(const CountingMeasure& nu, const Model& model, const McOptions& options);
// E[q(R^∞_{T^∞})] from independent split-chain runs started at σ(ν).
Estimate estimate_q_infty(const CountingMeasure& nu, const MutationModel& mutation, const McOptions& options);

// An event of the coupled chain and the terminal weights of the runs in it.
struct EventTally {
  std::uint64_t count = 0;
  Moments q;
  Moments q_infty;

  void add(const RunOutcome& run);
  void merge(const EventTally& other);
};

struct Proportion {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct Conditional {
  bool sufficient = false;  // at least kMinConditionalEvents occurrences
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline constexpr std::uint64_t kMinConditionalEvents = 100;

struct CouplingStats {
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  EventTally all;
  EventTally E;
  EventTally F;
  EventTally F1;
  EventTally F2;
  EventTally not_E;
  EventTally neither;  // neither E nor F
  std::map<FuzzyType, EventTally> F1x;
  std::map<std::pair<int, int>, EventTally> F2ixi;  // (site, allele)
  std::array<std::uint64_t, kEventKinds> event_counts{};

  void add(const RunOutcome& run);
  void merge(const CouplingStats& other);

  Proportion frequency(const EventTally& tally) const;
  static Conditional conditional_q(const EventTally& tally);
  static Conditional conditional_q_infty(const EventTally& tally);
};

// Coupled runs from (ν, σ(ν)) at the model's rho.
CouplingStats estimate_coupling(const CountingMeasure& nu, const Model& model, const McOptions& options);

struct SweepOptions {
  McOptions mc;
  bool run_mc = true;
  bool run_exact = true;
  std::size_t state_cap = kDefaultStateCap;
};

struct SweepRow {
  double rho = 0.0;
  std::optional<Estimate> mc;
  std::optional<double> q_exact;  // absent when the state cap is hit
  double q_infty = 0.0;
  double q1 = 0.0;

  std::optional<double> scaled_residual() const;         // ρ(q̂ - q_∞)
  std::optional<double> scaled_residual_stderr() const;  // ρ·stderr(q̂)
  std::optional<double> scaled_residual_exact() const;   // ρ(q - q_∞)
  std::optional<double> order_residual_exact() const;    // |ρ(q - q_∞) - q₁|
};

// One row per rho; every row reuses the seed, so rows share random streams.
std::vector<SweepRow> rho_sweep(const CountingMeasure& nu, const Model& model, std::span<const double> rhos,
                                const SweepOptions& options, const SingleSiteQ& ssq);

}  // namespace margsim

#endif  // MARGSIM_MONTECARLO_HPP_
