#ifndef MARGSIM_SRC_MOVES_HPP_
#define MARGSIM_SRC_MOVES_HPP_

// Compact move tables for the Gillespie loop. A Move names its participants
// by support index instead of materializing the target measure, and
// mutation moves are pre-merged per resulting candidate set.

#include <cstdint>
#include <vector>

#include "margsim/dynamics.hpp"

namespace margsim::detail {

struct Move {
  EventKind kind;
  Side side;
  std::uint8_t a = 0;        // support index of the (first) particle
  std::uint8_t b = 0;        // second particle for coalescences
  std::uint8_t site = 0;     // mutation site, or the site of a type-2 bad coalescence
  std::uint8_t alleles = 0;  // resulting candidate bits for mutation; 0 = impossible
  std::uint32_t term = 0;    // recombination term, resolved when the move is chosen
  double rate = 0.0;
};

// Appends rate-positive, non-null moves.
void marg_moves(const CountingMeasure& nu, const Model& model, Side side, std::vector<Move>& out);
void smarg_moves(const CountingMeasure& nu, const MutationModel& mutation, Side side, std::vector<Move>& out);
void coupled_moves(const CountingMeasure& left, const Model& model, std::vector<Move>& out);

// Applies a move of the single-component chains in place.
void apply_move(ProcessState& state, const Move& move, const RecombinationSpec* recombination);
// Applies a joint or one-sided move of the coupled chain in place.
void apply_move(CoupledState& state, const Move& move, const Model& model);

}  // namespace margsim::detail

#endif  // MARGSIM_SRC_MOVES_HPP_
