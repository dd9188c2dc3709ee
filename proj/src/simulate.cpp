#include "margsim/simulate.hpp"

#include <string>
#include <vector>

#include "moves.hpp"

namespace margsim {

namespace {

using detail::Move;

std::size_t choose(const std::vector<Move>& moves, double total, Rng& rng) {
  double target = rng.uniform() * total;
  for (std::size_t k = 0; k < moves.size(); ++k) {
    target -= moves[k].rate;
    if (target < 0.0) return k;
  }
  return moves.size() - 1;
}

double sum_rates(const std::vector<Move>& moves) {
  double total = 0.0;
  for (const auto& m : moves) total += m.rate;
  return total;
}

// Draws the partition of a recombination move.
void resolve(Move& move, const CountingMeasure& nu, const RecombinationSpec& spec, Rng& rng) {
  if (move.kind != EventKind::Recombination) return;
  move.term = effective_split_rate(spec, nu.entries()[move.a].first.sites()).sample(rng.uniform());
}

EventRecord describe(const Move& move, const CountingMeasure& nu, double time) {
  EventRecord r{.kind = move.kind, .side = move.side, .time = time, .first = nu.entries()[move.a].first};
  switch (move.kind) {
    case EventKind::Coalescence:
    case EventKind::GoodCoalescence:
    case EventKind::BadCoalescence1:
    case EventKind::BadCoalescence2:
      r.second = nu.entries()[move.b].first;
      r.overlap = r.first.sites() & r.second.sites();
      if (move.kind == EventKind::BadCoalescence2) r.site = move.site;
      break;
    case EventKind::Mutation:
      r.site = move.site;
      break;
    case EventKind::Recombination:
      break;
  }
  return r;
}

void check_step(std::uint64_t steps, const SimOptions& options) {
  if (steps >= options.step_cap) {
    throw ResourceCapError("simulation exceeded the step cap of " + std::to_string(options.step_cap) + " events");
  }
}

void check_conservation(const EventKind kind, std::uint64_t before, const ProcessState& after) {
  if (after.is_cemetery()) return;
  const std::uint64_t now = after.measure().site_observations();
  const bool ok = (kind == EventKind::Recombination || kind == EventKind::Mutation) ? now == before : now <= before;
  if (!ok) throw InternalError(std::string("site-observation count violated by ") + to_string(kind));
}

// Runs one component alone to its stopping time.
template <typename Enumerate>
void run_alone(ProcessState& state, const Model* model, Rng& rng, const SimOptions& options, Side side,
               double time, RunOutcome& out, Enumerate&& enumerate) {
  std::vector<Move> moves;
  while (!state.is_terminal()) {
    check_step(out.steps, options);
    moves.clear();
    enumerate(state.measure(), moves);
    const double total = sum_rates(moves);
    if (!(total > 0.0)) throw InternalError("non-terminal state with zero total rate: " + state.to_string());
    time += rng.exponential(total);
    Move move = moves[choose(moves, total, rng)];
    move.side = side;
    if (model) resolve(move, state.measure(), model->recombination(), rng);
    if (options.on_event) options.on_event(describe(move, state.measure(), time));
    const std::uint64_t before = options.check_invariants ? state.measure().site_observations() : 0;
    detail::apply_move(state, move, model ? &model->recombination() : nullptr);
    if (options.check_invariants) check_conservation(move.kind, before, state);
    ++out.event_counts[static_cast<int>(move.kind)];
    ++out.steps;
  }
}

}  // namespace

RunOutcome simulate(const ProcessState& initial, const Model& model, Rng& rng, const SimOptions& options) {
  RunOutcome out;
  ProcessState state = initial;
  run_alone(state, &model, rng, options, Side::Left, 0.0, out,
            [&](const CountingMeasure& nu, std::vector<Move>& moves) { detail::marg_moves(nu, model, Side::Left, moves); });
  out.q = root_weight(state, model.mutation());
  out.terminal = std::move(state);
  return out;
}

RunOutcome simulate_split(const ProcessState& initial, const MutationModel& mutation, Rng& rng,
                          const SimOptions& options) {
  if (!initial.is_cemetery() && !initial.measure().all_single_site()) {
    throw PreconditionError("simulate_split: multi-site particle in split chain");
  }
  RunOutcome out;
  ProcessState state = initial;
  run_alone(state, nullptr, rng, options, Side::Right, 0.0, out, [&](const CountingMeasure& nu, std::vector<Move>& moves) {
    detail::smarg_moves(nu, mutation, Side::Right, moves);
  });
  out.q_infty = root_weight(state, mutation);
  out.terminal_infty = std::move(state);
  return out;
}

RunOutcome simulate(const CoupledState& initial, const Model& model, Rng& rng, const SimOptions& options) {
  RunOutcome out;
  CoupledState state = initial;
  std::vector<Move> moves;
  double time = 0.0;
  bool seen_nonrecombination = false;

  while (state.coupled && !state.left.is_terminal()) {
    check_step(out.steps, options);
    const CountingMeasure& nu = state.left.measure();
    moves.clear();
    detail::coupled_moves(nu, model, moves);
    const double total = sum_rates(moves);
    if (!(total > 0.0)) throw InternalError("non-terminal coupled state with zero total rate");
    time += rng.exponential(total);
    Move move = moves[choose(moves, total, rng)];
    resolve(move, nu, model.recombination(), rng);

    EventRecord record = describe(move, nu, time);
    const bool bad = move.kind == EventKind::BadCoalescence1 || move.kind == EventKind::BadCoalescence2;
    if (move.kind != EventKind::Recombination && !seen_nonrecombination) {
      seen_nonrecombination = true;
      record.first_nonrecombination = true;
      out.F = bad;
    }
    if (bad) {
      // The coupling breaks here, so this is the first bad coalescence.
      out.E = false;
      if (move.kind == EventKind::BadCoalescence1) {
        out.F1 = out.F;
        const FuzzyType x = marginal(record.first, record.overlap);
        const FuzzyType y = marginal(record.second, record.overlap);
        if (out.F && x.is_exact() && x == y) out.f1_witness = x;
      } else {
        out.F2 = out.F;
        const AlleleSet x = record.first.at(move.site);
        const AlleleSet y = record.second.at(move.site);
        if (out.F && x.is_singleton() && x == y) out.f2_witness = std::pair{static_cast<int>(move.site), x.value()};
      }
    }
    if (options.on_event) options.on_event(record);

    const std::uint64_t before = options.check_invariants ? nu.site_observations() : 0;
    detail::apply_move(state, move, model);
    if (options.check_invariants) {
      if (move.side != Side::Right) check_conservation(move.kind, before, state.left);
      if (state.coupled && state.right.measure() != sigma(state.left.measure())) {
        throw InternalError("coupled state lost right == sigma(left)");
      }
    }
    ++out.event_counts[static_cast<int>(move.kind)];
    ++out.steps;
  }

  if (!state.coupled) {
    run_alone(state.left, &model, rng, options, Side::Left, time, out,
              [&](const CountingMeasure& nu, std::vector<Move>& m) { detail::marg_moves(nu, model, Side::Left, m); });
    run_alone(state.right, nullptr, rng, options, Side::Right, time, out, [&](const CountingMeasure& nu, std::vector<Move>& m) {
      detail::smarg_moves(nu, model.mutation(), Side::Right, m);
    });
  }
  out.q = root_weight(state.left, model.mutation());
  out.q_infty = root_weight(state.right, model.mutation());
  out.terminal = std::move(state.left);
  out.terminal_infty = std::move(state.right);
  return out;
}

}  // namespace margsim
