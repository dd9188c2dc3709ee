#ifndef MARGSIM_SIMULATE_HPP_
#define MARGSIM_SIMULATE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "margsim/dynamics.hpp"
#include "margsim/rng.hpp"

namespace margsim {

struct EventRecord {
  EventKind kind;
  Side side;
  double time = 0.0;  // time of the event on the clock of its component
  FuzzyType first{};
  FuzzyType second{};  // empty type for unary events
  SiteSet overlap{};   // d(first) ∩ d(second) for coalescences
  int site = -1;     // mutation site, or the site of a type-2 bad coalescence
  bool first_nonrecombination = false;
};

using EventSink = std::function<void(const EventRecord&)>;

struct SimOptions {
  std::uint64_t step_cap = 10'000'000;
  // Asserts site-observation conservation per event and σ-consistency while
  // coupled; throws InternalError on violation.
  bool check_invariants = false;
  EventSink on_event;
};

// One finished run. For single-chain runs only the matching fields are
// meaningful (q for the finite-rho chain, q_infty for the split chain).
struct RunOutcome {
  ProcessState terminal;        // R_T
  ProcessState terminal_infty;  // R^∞_{T^∞}
  double q = 0.0;               // q(R_T)
  double q_infty = 0.0;         // q(R^∞_{T^∞})

  // Coupling events. E: no bad coalescence before both components stop.
  // F: the first non-recombination event is a bad coalescence. F1/F2: F and
  // that first bad coalescence (TFBC) is of type 1/2.
  bool E = true;
  bool F = false;
  bool F1 = false;
  bool F2 = false;
  // F1_x witness: the common marginal x of the TFBC pair on d(y) ∩ d(z).
  std::optional<FuzzyType> f1_witness;
  // F2_{i, x_i} witness: (site, allele) shared by the TFBC fragments.
  std::optional<std::pair<int, int>> f2_witness;

  std::array<std::uint64_t, kEventKinds> event_counts{};
  std::uint64_t steps = 0;
};

// Runs the finite-rho chain from `initial` until it is simple or Δ.
RunOutcome simulate(const ProcessState& initial, const Model& model, Rng& rng, const SimOptions& options = {});

// Runs the split chain (single-site particles) until simple or Δ.
RunOutcome simulate_split(const ProcessState& initial, const MutationModel& mutation, Rng& rng,
                          const SimOptions& options = {});

// Runs the coupled chain until both components are simple or Δ, tallying
// the coupling events. After decoupling each component continues alone to
// its own stopping time.
RunOutcome simulate(const CoupledState& initial, const Model& model, Rng& rng, const SimOptions& options = {});

}  // namespace margsim

#endif  // MARGSIM_SIMULATE_HPP_
