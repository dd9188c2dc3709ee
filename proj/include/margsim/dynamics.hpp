#ifndef MARGSIM_DYNAMICS_HPP_
#define MARGSIM_DYNAMICS_HPP_

#include <cstdint>
#include <vector>

#include "margsim/measure.hpp"
#include "margsim/model.hpp"

namespace margsim {

enum class EventKind : std::uint8_t {
  Coalescence,  // uncoupled chains
  GoodCoalescence,
  BadCoalescence1,
  BadCoalescence2,
  Recombination,
  Mutation,
};
inline constexpr int kEventKinds = 6;
const char* to_string(EventKind kind);

// Which component of the coupled chain an event moves.
enum class Side : std::uint8_t { Both, Left, Right };

// One elementary event of a chain as written in its definition, with the
// target it produces. Null events (silent recombinations, mutations whose
// preimage is the current type) are kept and flagged.
struct Event {
  EventKind kind;
  ProcessState target;
  double rate = 0.0;
  bool self_loop = false;
};

// Distinct non-self targets with summed rates, sorted by target.
struct Transition {
  ProcessState target;
  double rate = 0.0;
};

// Finite-rho measure-valued ARG. Coalescences are enumerated over ordered
// pairs at rate ν(x)(ν - δ_x)(y); recombination by 𝒜 at rho·r_𝒜·ν(x);
// mutation y -> z at site i at ν(x)·u_i·M_i(y, z).
std::vector<Event> marg_events(const CountingMeasure& nu, const Model& model);
std::vector<Transition> marg_transitions(const CountingMeasure& nu, const Model& model);

// Split (infinite-rho) chain on single-site types: same-site coalescence
// and mutation only. Throws PreconditionError for multi-site particles.
std::vector<Event> smarg_events(const CountingMeasure& nu, const MutationModel& mutation);
std::vector<Transition> smarg_transitions(const CountingMeasure& nu, const MutationModel& mutation);

// State of the coupled chain. While `coupled`, right == σ(left) and the
// joint transitions apply; once a bad coalescence (or the cemetery) breaks
// the coupling the components move independently for good.
struct CoupledState {
  ProcessState left;
  ProcessState right;
  bool coupled = false;

  static CoupledState start(const CountingMeasure& nu);

  bool is_terminal() const { return left.is_terminal() && right.is_terminal(); }

  bool operator==(const CoupledState&) const = default;
  auto operator<=>(const CoupledState&) const = default;
};

struct CoupledEvent {
  EventKind kind;
  Side side;
  CoupledState target;
  double rate = 0.0;
  bool self_loop = false;
};

struct CoupledTransition {
  CoupledState target;
  double rate = 0.0;
};

// Throws PreconditionError if `coupled` is set but right != σ(left).
std::vector<CoupledEvent> cmarg_events(const CoupledState& state, const Model& model);
std::vector<CoupledTransition> cmarg_transitions(const CoupledState& state, const Model& model);

// Merge helpers: drop self-loops, sum rates of equal targets.
std::vector<Transition> merge_events(const ProcessState& source, const std::vector<Event>& events);
std::vector<CoupledTransition> merge_events(const CoupledState& source, const std::vector<CoupledEvent>& events);

}  // namespace margsim

#endif  // MARGSIM_DYNAMICS_HPP_
