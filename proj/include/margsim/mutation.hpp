#ifndef MARGSIM_MUTATION_HPP_
#define MARGSIM_MUTATION_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "margsim/measure.hpp"
#include "margsim/types.hpp"

namespace margsim {

// Mutation at one site: rate u and row-stochastic kernel M over the site's
// alleles. Rows are renormalized on construction; a row sum further than
// 1e-9 from one is rejected.
class MutationKernel {
 public:
  MutationKernel() : MutationKernel(0.0, {{1.0}}) {}
  MutationKernel(double rate, std::vector<std::vector<double>> rows);

  // Parent-independent kernel: every row equals `row`.
  static MutationKernel parent_independent(double rate, std::vector<double> row);

  double rate() const { return rate_; }
  int alleles() const { return alleles_; }
  double operator()(int from, int to) const { return matrix_[from * alleles_ + to]; }
  std::vector<std::vector<double>> rows() const;

  bool is_parent_independent(double tol = 1e-12) const;
  // Strong connectivity of the directed graph a -> b for M(a,b) > 0, a != b.
  bool is_irreducible() const;

 private:
  double rate_ = 0.0;
  int alleles_ = 1;
  std::vector<double> matrix_;
};

// π with π M = π, Σ π = 1, via a direct solve of (Mᵀ - I)π = 0 with the
// normalization row. Throws ModelError for reducible kernels.
std::vector<double> stationary(const MutationKernel& kernel);

// Why a kernel cannot drive an irreducible mutation chain; empty if it can.
std::optional<std::string> irreducibility_problem(const MutationKernel& kernel);

// The fuzzy type that must be observed just before a mutation y -> z at
// site i for x to be observed just after it. nullopt when the candidate set
// at i becomes empty (impossible history). Throws if i ∉ d(x).
std::optional<FuzzyType> mutation_preimage(const FuzzyType& x, int site, int from, int to);

// Candidate set at a site after the preimage map; may be empty.
AlleleSet preimage_alleles(AlleleSet current, int from, int to);

// One merged, non-self-loop preimage move of a site's candidate set.
struct AlleleMove {
  AlleleSet result;  // empty: the move leads to the cemetery
  double rate = 0.0;
};

// Per-site kernels with their stationary distributions and a table of
// preimage moves for every candidate set.
class MutationModel {
 public:
  MutationModel() = default;
  // Throws ModelError (all problems) for reducible kernels or u = 0 at a
  // site with more than one allele.
  explicit MutationModel(std::vector<MutationKernel> kernels);

  int sites() const { return static_cast<int>(kernels_.size()); }
  const MutationKernel& kernel(int site) const { return kernels_.at(site); }
  std::span<const double> stationary(int site) const { return stationary_.at(site); }

  // π_i(set) := Σ_{a ∈ set} π_i(a).
  double pi(int site, AlleleSet alleles) const;

  // Moves leaving `alleles` at `site`, merged by result, self-loops omitted.
  std::span<const AlleleMove> moves(int site, AlleleSet alleles) const {
    return moves_[site][alleles.bits()];
  }
  // u_i * |X_i|: total mutation-mark rate at a site, self-loops included.
  double total_rate(int site) const {
    return kernels_[site].rate() * kernels_[site].alleles();
  }

 private:
  std::vector<MutationKernel> kernels_;
  std::vector<std::vector<double>> stationary_;
  std::vector<std::vector<std::vector<AlleleMove>>> moves_;
};

// Product of π_i over the support and observed sites of a simple measure.
// Throws PreconditionError for non-simple input.
double root_weight(const CountingMeasure& nu, const MutationModel& mutation);
// As above; 0 for the cemetery.
double root_weight(const ProcessState& state, const MutationModel& mutation);

}  // namespace margsim

#endif  // MARGSIM_MUTATION_HPP_
