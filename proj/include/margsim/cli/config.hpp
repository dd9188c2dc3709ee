#ifndef MARGSIM_CLI_CONFIG_HPP_
#define MARGSIM_CLI_CONFIG_HPP_

#include <json.hpp>
#include <string>
#include <vector>

#include "margsim/model.hpp"

namespace margsim::cli {

// Site and allele labels interned to indices. Unlabeled inputs get their
// decimal index as label.
struct LabelTable {
  std::vector<std::string> sites;
  std::vector<std::vector<std::string>> alleles;

  std::string describe(const FuzzyType& x) const;  // "site=allele;..."
  nlohmann::json to_json() const;
};

struct ModelConfig {
  LabelTable labels;
  Model model;
  std::vector<double> rhos;  // at least one; model carries rhos.front()
  bool rho_is_list = false;
  CountingMeasure sample;

  // Canonical form: explicit labels, renormalized kernels, merged explicit
  // partitions. Parsing it gives back the same model and sample.
  nlohmann::json normalized() const;
};

// Throws ModelError listing every problem found.
ModelConfig parse_config(const nlohmann::json& doc);
// Reads and parses a JSON file; unreadable or malformed files raise
// ModelError too.
ModelConfig load_config(const std::string& path);

}  // namespace margsim::cli

#endif  // MARGSIM_CLI_CONFIG_HPP_
