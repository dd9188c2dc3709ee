#include "margsim/dynamics.hpp"

#include <map>

#include "moves.hpp"

namespace margsim {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Coalescence: return "coalescence";
    case EventKind::GoodCoalescence: return "good_coalescence";
    case EventKind::BadCoalescence1: return "bad_coalescence_1";
    case EventKind::BadCoalescence2: return "bad_coalescence_2";
    case EventKind::Recombination: return "recombination";
    case EventKind::Mutation: return "mutation";
  }
  return "?";
}

namespace {

double pair_rate(std::size_t a, std::size_t b, std::uint32_t ca, std::uint32_t cb) {
  return a == b ? static_cast<double>(ca) * (ca - 1.0) : static_cast<double>(ca) * cb;
}

CountingMeasure coalesced(CountingMeasure nu, const FuzzyType& x, const FuzzyType& y) {
  nu.remove(x);
  nu.remove(y);
  nu.add(join(x, y));
  return nu;
}

ProcessState coalescence_target(const CountingMeasure& nu, const FuzzyType& x, const FuzzyType& y) {
  if (!compatible(x, y)) return ProcessState::cemetery();
  return ProcessState(coalesced(nu, x, y));
}

CountingMeasure fragmented(CountingMeasure nu, const FuzzyType& x, const Partition& partition) {
  nu.remove(x);
  for (SiteSet block : partition.blocks()) {
    if (block.intersects(x.sites())) nu.add(marginal(x, block));
  }
  return nu;
}

CountingMeasure replaced(CountingMeasure nu, const FuzzyType& from, const FuzzyType& to) {
  nu.remove(from);
  nu.add(to);
  return nu;
}

FuzzyType at_site(const FuzzyType& x, int site) { return marginal(x, SiteSet::single(site)); }

// Mutation events of one chain on `nu` (Def. rates ν(x) u_i M_i(y, z)).
template <typename Emit>
void for_each_mutation(const CountingMeasure& nu, const MutationModel& mutation, Emit&& emit) {
  for (const auto& [x, c] : nu) {
    for (int i : x.sites()) {
      const auto& k = mutation.kernel(i);
      for (int y = 0; y < k.alleles(); ++y) {
        for (int z = 0; z < k.alleles(); ++z) {
          const double rate = c * k.rate() * k(y, z);
          if (rate <= 0.0) continue;
          emit(x, i, mutation_preimage(x, i, y, z), rate);
        }
      }
    }
  }
}

}  // namespace

std::vector<Event> marg_events(const CountingMeasure& nu, const Model& model) {
  std::vector<Event> out;
  const auto entries = nu.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = 0; b < entries.size(); ++b) {
      const double rate = pair_rate(a, b, entries[a].second, entries[b].second);
      if (rate <= 0.0) continue;
      out.push_back({EventKind::Coalescence, coalescence_target(nu, entries[a].first, entries[b].first), rate, false});
    }
  }
  const auto& spec = model.recombination();
  for (const auto& [x, c] : nu) {
    for (const auto& term : spec.terms()) {
      if (term.rate <= 0.0) continue;
      const bool silent = !term.partition.splits(x.sites());
      out.push_back({EventKind::Recombination, ProcessState(fragmented(nu, x, term.partition)),
                     spec.rho() * term.rate * c, silent});
    }
  }
  for_each_mutation(nu, model.mutation(), [&](const FuzzyType& x, int, const std::optional<FuzzyType>& pre, double rate) {
    if (!pre) {
      out.push_back({EventKind::Mutation, ProcessState::cemetery(), rate, false});
    } else {
      out.push_back({EventKind::Mutation, ProcessState(replaced(nu, x, *pre)), rate, *pre == x});
    }
  });
  return out;
}

std::vector<Transition> marg_transitions(const CountingMeasure& nu, const Model& model) {
  return merge_events(ProcessState(nu), marg_events(nu, model));
}

std::vector<Event> smarg_events(const CountingMeasure& nu, const MutationModel& mutation) {
  if (!nu.all_single_site()) throw PreconditionError("smarg_events: multi-site particle in split chain");
  std::vector<Event> out;
  const auto entries = nu.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = 0; b < entries.size(); ++b) {
      if (entries[a].first.sites() != entries[b].first.sites()) continue;
      const double rate = pair_rate(a, b, entries[a].second, entries[b].second);
      if (rate <= 0.0) continue;
      out.push_back({EventKind::Coalescence, coalescence_target(nu, entries[a].first, entries[b].first), rate, false});
    }
  }
  for_each_mutation(nu, mutation, [&](const FuzzyType& x, int, const std::optional<FuzzyType>& pre, double rate) {
    if (!pre) {
      out.push_back({EventKind::Mutation, ProcessState::cemetery(), rate, false});
    } else {
      out.push_back({EventKind::Mutation, ProcessState(replaced(nu, x, *pre)), rate, *pre == x});
    }
  });
  return out;
}

std::vector<Transition> smarg_transitions(const CountingMeasure& nu, const MutationModel& mutation) {
  return merge_events(ProcessState(nu), smarg_events(nu, mutation));
}

CoupledState CoupledState::start(const CountingMeasure& nu) {
  return CoupledState{ProcessState(nu), ProcessState(sigma(nu)), true};
}

std::vector<CoupledEvent> cmarg_events(const CoupledState& state, const Model& model) {
  std::vector<CoupledEvent> out;
  if (!state.coupled) {
    if (!state.left.is_cemetery()) {
      for (auto& e : marg_events(state.left.measure(), model)) {
        out.push_back({e.kind, Side::Left, CoupledState{std::move(e.target), state.right, false}, e.rate, e.self_loop});
      }
    }
    if (!state.right.is_cemetery()) {
      for (auto& e : smarg_events(state.right.measure(), model.mutation())) {
        out.push_back({e.kind, Side::Right, CoupledState{state.left, std::move(e.target), false}, e.rate, e.self_loop});
      }
    }
    return out;
  }

  if (state.left.is_cemetery() || state.right.is_cemetery() || state.right.measure() != sigma(state.left.measure())) {
    throw PreconditionError("cmarg_events: coupled flag set but right != sigma(left)");
  }
  const CountingMeasure& nu = state.left.measure();
  const CountingMeasure& split = state.right.measure();
  const ProcessState delta = ProcessState::cemetery();
  const auto entries = nu.entries();

  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = 0; b < entries.size(); ++b) {
      const FuzzyType& x = entries[a].first;
      const FuzzyType& y = entries[b].first;
      const double rate = pair_rate(a, b, entries[a].second, entries[b].second);
      if (rate <= 0.0) continue;
      const SiteSet overlap = x.sites() & y.sites();
      const bool ok = compatible(x, y);
      if (overlap.size() <= 1) {
        if (!ok) {
          out.push_back({EventKind::GoodCoalescence, Side::Both, CoupledState{delta, delta, false}, rate, false});
          continue;
        }
        CountingMeasure right = split;
        for (int i : overlap) right = coalesced(right, at_site(x, i), at_site(y, i));
        out.push_back({EventKind::GoodCoalescence, Side::Both,
                       CoupledState{ProcessState(coalesced(nu, x, y)), ProcessState(std::move(right)), true}, rate,
                       false});
        continue;
      }
      out.push_back({EventKind::BadCoalescence1, Side::Left,
                     CoupledState{coalescence_target(nu, x, y), state.right, false}, rate, false});
      for (int i : overlap) {
        out.push_back({EventKind::BadCoalescence2, Side::Right,
                       CoupledState{state.left, coalescence_target(split, at_site(x, i), at_site(y, i)), false}, rate,
                       false});
      }
    }
  }

  const auto& spec = model.recombination();
  for (const auto& [x, c] : nu) {
    for (const auto& term : spec.terms()) {
      if (term.rate <= 0.0) continue;
      out.push_back({EventKind::Recombination, Side::Left,
                     CoupledState{ProcessState(fragmented(nu, x, term.partition)), state.right, true},
                     spec.rho() * term.rate * c, !term.partition.splits(x.sites())});
    }
  }

  for_each_mutation(nu, model.mutation(),
                    [&](const FuzzyType& x, int i, const std::optional<FuzzyType>& pre, double rate) {
                      if (!pre) {
                        out.push_back({EventKind::Mutation, Side::Both, CoupledState{delta, delta, false}, rate, false});
                        return;
                      }
                      CoupledState target{ProcessState(replaced(nu, x, *pre)),
                                          ProcessState(replaced(split, at_site(x, i), at_site(*pre, i))), true};
                      out.push_back({EventKind::Mutation, Side::Both, std::move(target), rate, *pre == x});
                    });
  return out;
}

std::vector<CoupledTransition> cmarg_transitions(const CoupledState& state, const Model& model) {
  return merge_events(state, cmarg_events(state, model));
}

std::vector<Transition> merge_events(const ProcessState& source, const std::vector<Event>& events) {
  std::map<ProcessState, double> merged;
  for (const auto& e : events) {
    if (e.target == source) continue;
    merged[e.target] += e.rate;
  }
  std::vector<Transition> out;
  out.reserve(merged.size());
  for (auto& [t, r] : merged) out.push_back({t, r});
  return out;
}

std::vector<CoupledTransition> merge_events(const CoupledState& source, const std::vector<CoupledEvent>& events) {
  std::map<CoupledState, double> merged;
  for (const auto& e : events) {
    if (e.target.left == source.left && e.target.right == source.right) continue;
    merged[e.target] += e.rate;
  }
  std::vector<CoupledTransition> out;
  out.reserve(merged.size());
  for (auto& [t, r] : merged) out.push_back({t, r});
  return out;
}

namespace detail {

namespace {

void push_pair_moves(const CountingMeasure& nu, Side side, bool same_sites_only, std::vector<Move>& out) {
  const auto entries = nu.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    const std::uint32_t ca = entries[a].second;
    if (ca >= 2) {
      out.push_back({EventKind::Coalescence, side, static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(a), 0, 0, 0,
                     static_cast<double>(ca) * (ca - 1.0)});
    }
    for (std::size_t b = a + 1; b < entries.size(); ++b) {
      if (same_sites_only && entries[a].first.sites() != entries[b].first.sites()) continue;
      out.push_back({EventKind::Coalescence, side, static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), 0, 0, 0,
                     2.0 * ca * entries[b].second});
    }
  }
}

void push_mutation_moves(const CountingMeasure& nu, const MutationModel& mutation, Side side,
                         std::vector<Move>& out) {
  const auto entries = nu.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    const FuzzyType& x = entries[a].first;
    const double c = entries[a].second;
    for (int i : x.sites()) {
      for (const AlleleMove& m : mutation.moves(i, x.at(i))) {
        out.push_back({EventKind::Mutation, side, static_cast<std::uint8_t>(a), 0, static_cast<std::uint8_t>(i),
                       m.result.bits(), 0, c * m.rate});
      }
    }
  }
}

void push_split_moves(const CountingMeasure& nu, const RecombinationSpec& spec, Side side, std::vector<Move>& out) {
  const auto entries = nu.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    const double total = spec.rho() * spec.split_base_rate(entries[a].first.sites());
    if (total > 0.0) {
      out.push_back({EventKind::Recombination, side, static_cast<std::uint8_t>(a), 0, 0, 0, 0,
                     entries[a].second * total});
    }
  }
}

void check_support(const CountingMeasure& nu) {
  if (nu.support_size() > 255) throw ResourceCapError("state support exceeds 255 distinct types");
}

void fragment_in_place(CountingMeasure& nu, const FuzzyType& x, const Partition& partition) {
  nu.remove(x);
  for (SiteSet block : partition.blocks()) {
    if (block.intersects(x.sites())) nu.add(marginal(x, block));
  }
}

// Coalesces x and y in place; false when incompatible.
bool coalesce_in_place(CountingMeasure& nu, const FuzzyType& x, const FuzzyType& y) {
  if (!compatible(x, y)) return false;
  nu.remove(x);
  nu.remove(y);
  nu.add(join(x, y));
  return true;
}

}  // namespace

void marg_moves(const CountingMeasure& nu, const Model& model, Side side, std::vector<Move>& out) {
  check_support(nu);
  push_pair_moves(nu, side, false, out);
  push_split_moves(nu, model.recombination(), side, out);
  push_mutation_moves(nu, model.mutation(), side, out);
}

void smarg_moves(const CountingMeasure& nu, const MutationModel& mutation, Side side, std::vector<Move>& out) {
  check_support(nu);
  push_pair_moves(nu, side, true, out);
  push_mutation_moves(nu, mutation, side, out);
}

void coupled_moves(const CountingMeasure& left, const Model& model, std::vector<Move>& out) {
  check_support(left);
  const auto entries = left.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = a; b < entries.size(); ++b) {
      const std::uint32_t ca = entries[a].second;
      const double rate = a == b ? ca * (ca - 1.0) : 2.0 * ca * entries[b].second;
      if (rate <= 0.0) continue;
      const SiteSet overlap = entries[a].first.sites() & entries[b].first.sites();
      const auto ia = static_cast<std::uint8_t>(a), ib = static_cast<std::uint8_t>(b);
      if (overlap.size() <= 1) {
        out.push_back({EventKind::GoodCoalescence, Side::Both, ia, ib, 0, 0, 0, rate});
        continue;
      }
      out.push_back({EventKind::BadCoalescence1, Side::Left, ia, ib, 0, 0, 0, rate});
      for (int i : overlap) {
        out.push_back({EventKind::BadCoalescence2, Side::Right, ia, ib, static_cast<std::uint8_t>(i), 0, 0, rate});
      }
    }
  }
  push_split_moves(left, model.recombination(), Side::Left, out);
  push_mutation_moves(left, model.mutation(), Side::Both, out);
}

void apply_move(ProcessState& state, const Move& move, const RecombinationSpec* recombination) {
  if (state.is_cemetery()) throw InternalError("apply_move on the cemetery");
  CountingMeasure& nu = state.measure();
  const FuzzyType x = nu.entries()[move.a].first;
  switch (move.kind) {
    case EventKind::Coalescence:
    case EventKind::GoodCoalescence:
    case EventKind::BadCoalescence1: {
      const FuzzyType y = nu.entries()[move.b].first;
      if (!coalesce_in_place(nu, x, y)) state = ProcessState::cemetery();
      return;
    }
    case EventKind::Recombination:
      fragment_in_place(nu, x, recombination->terms()[move.term].partition);
      return;
    case EventKind::Mutation: {
      if (move.alleles == 0) {
        state = ProcessState::cemetery();
        return;
      }
      FuzzyType y = x;
      y.set(move.site, AlleleSet::from_bits(move.alleles));
      nu.remove(x);
      nu.add(y);
      return;
    }
    case EventKind::BadCoalescence2:
      break;
  }
  throw InternalError("apply_move: move kind not valid for a single chain");
}

void apply_move(CoupledState& state, const Move& move, const Model& model) {
  if (!state.coupled) {
    if (move.side == Side::Left) {
      apply_move(state.left, move, &model.recombination());
    } else if (move.side == Side::Right) {
      apply_move(state.right, move, nullptr);
    } else {
      throw InternalError("joint move on a decoupled state");
    }
    return;
  }

  const CountingMeasure& nu = state.left.measure();
  const FuzzyType x = nu.entries()[move.a].first;
  const ProcessState delta = ProcessState::cemetery();
  switch (move.kind) {
    case EventKind::GoodCoalescence: {
      const FuzzyType y = nu.entries()[move.b].first;
      if (!compatible(x, y)) {
        state = CoupledState{delta, delta, false};
        return;
      }
      for (int i : x.sites() & y.sites()) {
        coalesce_in_place(state.right.measure(), at_site(x, i), at_site(y, i));
      }
      coalesce_in_place(state.left.measure(), x, y);
      return;
    }
    case EventKind::BadCoalescence1: {
      const FuzzyType y = nu.entries()[move.b].first;
      state.coupled = false;
      if (!coalesce_in_place(state.left.measure(), x, y)) state.left = delta;
      return;
    }
    case EventKind::BadCoalescence2: {
      const FuzzyType y = nu.entries()[move.b].first;
      state.coupled = false;
      if (!coalesce_in_place(state.right.measure(), at_site(x, move.site), at_site(y, move.site))) {
        state.right = delta;
      }
      return;
    }
    case EventKind::Recombination:
      fragment_in_place(state.left.measure(), x, model.recombination().terms()[move.term].partition);
      return;
    case EventKind::Mutation: {
      if (move.alleles == 0) {
        state = CoupledState{delta, delta, false};
        return;
      }
      FuzzyType y = x;
      y.set(move.site, AlleleSet::from_bits(move.alleles));
      CountingMeasure& right = state.right.measure();
      right.remove(at_site(x, move.site));
      right.add(at_site(y, move.site));
      CountingMeasure& left = state.left.measure();
      left.remove(x);
      left.add(y);
      return;
    }
    case EventKind::Coalescence:
      break;
  }
  throw InternalError("apply_move: move kind not valid for a coupled state");
}

}  // namespace detail

}  // namespace margsim
