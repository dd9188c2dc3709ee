#ifndef MARGSIM_MODEL_HPP_
#define MARGSIM_MODEL_HPP_

#include <vector>

#include "margsim/mutation.hpp"
#include "margsim/recombination.hpp"

namespace margsim {

// A validated model: n sites, per-site mutation, recombination spec with
// rho. Construction checks the site and allele caps, that the pieces agree
// on n, and the separation condition; every problem is reported at once.
class Model {
 public:
  Model(MutationModel mutation, RecombinationSpec recombination);
  // n = 1 convenience: no recombination.
  explicit Model(MutationModel mutation);

  int sites() const { return mutation_.sites(); }
  int alleles(int site) const { return mutation_.kernel(site).alleles(); }
  double rho() const { return recombination_.rho(); }
  const MutationModel& mutation() const { return mutation_; }
  const RecombinationSpec& recombination() const { return recombination_; }

  Model with_rho(double rho) const;

  // Throws PreconditionError unless every entry of nu is observed only at
  // sites of the model with allele indices in range and no empty type.
  void check_measure(const CountingMeasure& nu) const;

 private:
  MutationModel mutation_;
  RecombinationSpec recombination_;
};

}  // namespace margsim

#endif  // MARGSIM_MODEL_HPP_
