#include "margsim/model.hpp"

#include <string>

namespace margsim {

Model::Model(MutationModel mutation, RecombinationSpec recombination)
    : mutation_(std::move(mutation)), recombination_(std::move(recombination)) {
  std::vector<std::string> problems;
  if (mutation_.sites() < 1 || mutation_.sites() > kMaxSites) {
    problems.push_back("site count " + std::to_string(mutation_.sites()) + " outside 1.." +
                       std::to_string(kMaxSites));
  } else if (recombination_.sites() != mutation_.sites()) {
    problems.push_back("recombination spec has " + std::to_string(recombination_.sites()) +
                       " sites but the mutation model has " + std::to_string(mutation_.sites()));
  } else {
    auto report = separation_check(recombination_);
    if (!report.ok()) problems.push_back(report.describe());
  }
  if (!problems.empty()) throw ModelError(std::move(problems));
}

Model::Model(MutationModel mutation)
    : Model(std::move(mutation), RecombinationSpec(1, {}, 1.0)) {}

Model Model::with_rho(double rho) const {
  Model copy = *this;
  copy.recombination_ = recombination_.with_rho(rho);
  return copy;
}

void Model::check_measure(const CountingMeasure& nu) const {
  const SiteSet all = SiteSet::full(sites());
  for (const auto& [x, c] : nu) {
    if (x.is_empty_type()) throw PreconditionError("measure contains the empty type");
    if (!x.sites().subset_of(all)) throw PreconditionError("type " + x.to_string() + " observed outside the model's sites");
    for (int i : x.sites()) {
      if (!x.at(i).subset_of(AlleleSet::all(alleles(i)))) {
        throw PreconditionError("type " + x.to_string() + " uses an allele outside site " + std::to_string(i));
      }
    }
  }
}

}  // namespace margsim
