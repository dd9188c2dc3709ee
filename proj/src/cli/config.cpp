#include "margsim/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace margsim::cli {
namespace {

using nlohmann::json;

class Problems {
 public:
  void add(std::string message) { list_.push_back(std::move(message)); }
  bool empty() const { return list_.empty(); }
  void throw_if_any() {
    if (!list_.empty()) throw ModelError(std::move(list_));
  }

 private:
  std::vector<std::string> list_;
};

std::optional<double> number(const json& v) {
  if (!v.is_number()) return std::nullopt;
  const double d = v.get<double>();
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

std::vector<std::string> index_labels(int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(std::to_string(i));
  return out;
}

// JSON integers are indices, strings are labels.
std::optional<int> resolve(const json& v, const std::vector<std::string>& labels) {
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i >= 0 && i < static_cast<long long>(labels.size())) return static_cast<int>(i);
    return std::nullopt;
  }
  if (v.is_string()) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == v.get<std::string>()) return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

// Object keys are always strings: a label, else a decimal index.
std::optional<int> resolve_key(const std::string& key, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == key) return static_cast<int>(i);
  }
  if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos && key.size() < 6) {
    const int i = std::stoi(key);
    if (i < static_cast<int>(labels.size())) return i;
  }
  return std::nullopt;
}

std::string unique_problem(const std::vector<std::string>& labels, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) return what + " label '" + l + "' is not unique";
  }
  return {};
}

LabelTable parse_labels(const json& doc, Problems& problems) {
  LabelTable t;
  const json& sites = doc.contains("sites") ? doc["sites"] : json();
  if (sites.is_number_integer()) {
    const auto n = sites.get<long long>();
    if (n < 1 || n > kMaxSites) {
      problems.add("sites: " + std::to_string(n) + " outside 1.." + std::to_string(kMaxSites));
      return t;
    }
    t.sites = index_labels(static_cast<int>(n));
  } else if (sites.is_array() && !sites.empty()) {
    for (const auto& s : sites) {
      if (!s.is_string()) {
        problems.add("sites: labels must be strings");
        return t;
      }
      t.sites.push_back(s.get<std::string>());
    }
    if (t.sites.size() > kMaxSites) {
      problems.add("sites: " + std::to_string(t.sites.size()) + " outside 1.." + std::to_string(kMaxSites));
      t.sites.clear();
      return t;
    }
    if (auto p = unique_problem(t.sites, "site"); !p.empty()) problems.add(p);
  } else {
    problems.add("sites: expected a positive integer or a list of labels");
    return t;
  }

  const int n = static_cast<int>(t.sites.size());
  const json& alleles = doc.contains("alleles") ? doc["alleles"] : json();
  auto one = [&](const json& a, int site) {
    const std::string where = "alleles[" + std::to_string(site) + "]";
    if (a.is_number_integer()) {
      const auto k = a.get<long long>();
      if (k < 1 || k > kMaxAlleles) {
        problems.add(where + ": " + std::to_string(k) + " outside 1.." + std::to_string(kMaxAlleles));
        return index_labels(1);
      }
      return index_labels(static_cast<int>(k));
    }
    if (a.is_array() && !a.empty()) {
      std::vector<std::string> labels;
      for (const auto& l : a) {
        if (!l.is_string()) {
          problems.add(where + ": labels must be strings");
          return index_labels(1);
        }
        labels.push_back(l.get<std::string>());
      }
      if (labels.size() > kMaxAlleles) {
        problems.add(where + ": " + std::to_string(labels.size()) + " outside 1.." + std::to_string(kMaxAlleles));
        return index_labels(1);
      }
      if (auto p = unique_problem(labels, where); !p.empty()) problems.add(p);
      return labels;
    }
    problems.add(where + ": expected an allele count or a list of labels");
    return index_labels(1);
  };
  if (alleles.is_array()) {
    if (static_cast<int>(alleles.size()) != n) {
      problems.add("alleles: expected " + std::to_string(n) + " entries, got " + std::to_string(alleles.size()));
    }
    for (int i = 0; i < n; ++i) t.alleles.push_back(i < static_cast<int>(alleles.size()) ? one(alleles[i], i) : index_labels(1));
  } else if (alleles.is_number_integer()) {
    const auto shared = one(alleles, 0);
    t.alleles.assign(n, shared);
  } else {
    problems.add("alleles: expected a count, or one count or label list per site");
    t.alleles.assign(n, index_labels(1));
  }
  return t;
}

std::optional<MutationModel> parse_mutation(const json& doc, const LabelTable& labels, Problems& problems) {
  const int n = static_cast<int>(labels.sites.size());
  const json& mutation = doc.contains("mutation") ? doc["mutation"] : json();
  if (!mutation.is_array() || static_cast<int>(mutation.size()) != n) {
    problems.add("mutation: expected one {u, M} entry per site");
    return std::nullopt;
  }
  std::vector<MutationKernel> kernels;
  bool ok = true;
  for (int i = 0; i < n; ++i) {
    const std::string where = "mutation[" + labels.sites[i] + "]";
    const json& m = mutation[i];
    const int k = static_cast<int>(labels.alleles[i].size());
    const auto u = m.is_object() && m.contains("u") ? number(m["u"]) : std::nullopt;
    if (!u || *u < 0.0) {
      problems.add(where + ": u must be a non-negative number");
      ok = false;
      continue;
    }
    std::vector<std::vector<double>> rows;
    const json& rows_json = m.contains("M") ? m["M"] : json();
    bool shape = rows_json.is_array() && static_cast<int>(rows_json.size()) == k;
    if (shape) {
      for (const auto& r : rows_json) {
        if (!r.is_array() || static_cast<int>(r.size()) != k) {
          shape = false;
          break;
        }
        std::vector<double> row;
        for (const auto& v : r) {
          const auto d = number(v);
          if (!d || *d < 0.0) {
            shape = false;
            break;
          }
          row.push_back(*d);
        }
        if (!shape) break;
        rows.push_back(std::move(row));
      }
    }
    if (!shape) {
      problems.add(where + ": M must be a " + std::to_string(k) + "x" + std::to_string(k) +
                   " matrix of non-negative numbers");
      ok = false;
      continue;
    }
    try {
      kernels.emplace_back(*u, std::move(rows));
      if (auto p = irreducibility_problem(kernels.back())) {
        problems.add(where + ": " + *p);
        ok = false;
      }
    } catch (const ModelError& e) {
      for (const auto& p : e.problems()) problems.add(where + ": " + p);
      ok = false;
    } catch (const PreconditionError& e) {
      problems.add(where + ": " + e.what());
      ok = false;
    }
  }
  if (!ok) return std::nullopt;
  try {
    return MutationModel(std::move(kernels));
  } catch (const ModelError& e) {
    for (const auto& p : e.problems()) problems.add("mutation: " + p);
  }
  return std::nullopt;
}

std::vector<double> parse_rhos(const json& doc, Problems& problems, bool& is_list) {
  std::vector<double> out;
  const json& rho = doc.contains("rho") ? doc["rho"] : json(1.0);
  is_list = rho.is_array();
  const json list = is_list ? rho : json::array({rho});
  for (const auto& r : list) {
    const auto d = number(r);
    if (!d || *d <= 0.0) {
      problems.add("rho: every value must be a positive finite number");
      return {1.0};
    }
    out.push_back(*d);
  }
  if (out.empty()) {
    problems.add("rho: empty list");
    out.push_back(1.0);
  }
  return out;
}

std::optional<RecombinationSpec> parse_recombination(const json& doc, const LabelTable& labels, double rho,
                                                     Problems& problems) {
  const int n = static_cast<int>(labels.sites.size());
  if (!doc.contains("recombination") || doc["recombination"].is_null()) {
    return RecombinationSpec(n, {}, rho);
  }
  const json& rec = doc["recombination"];
  if (!rec.is_object()) {
    problems.add("recombination: expected an object");
    return std::nullopt;
  }
  try {
    if (rec.contains("preset")) {
      if (rec["preset"] != "single_crossover") {
        problems.add("recombination.preset: only \"single_crossover\" is known");
        return std::nullopt;
      }
      std::vector<double> rates;
      const json& r = rec.contains("rates") ? rec["rates"] : json();
      if (!r.is_array() || static_cast<int>(r.size()) != n - 1) {
        problems.add("recombination.rates: expected " + std::to_string(n - 1) + " crossover rates");
        return std::nullopt;
      }
      for (const auto& v : r) {
        const auto d = number(v);
        if (!d || *d < 0.0) {
          problems.add("recombination.rates: rates must be non-negative numbers");
          return std::nullopt;
        }
        rates.push_back(*d);
      }
      if (n < 2) return RecombinationSpec(n, {}, rho);
      return single_crossover_preset(n, rates, rho);
    }
    const json& parts = rec.contains("partitions") ? rec["partitions"] : json();
    if (!parts.is_array()) {
      problems.add("recombination: expected \"preset\" or \"partitions\"");
      return std::nullopt;
    }
    std::vector<RecombinationTerm> terms;
    bool ok = true;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const std::string where = "recombination.partitions[" + std::to_string(k) + "]";
      const json& p = parts[k];
      const auto r = p.is_object() && p.contains("r") ? number(p["r"]) : std::nullopt;
      if (!r || *r < 0.0) {
        problems.add(where + ": r must be a non-negative number");
        ok = false;
        continue;
      }
      std::vector<SiteSet> blocks;
      const json& bj = p.contains("blocks") ? p["blocks"] : json();
      bool shape = bj.is_array() && !bj.empty();
      for (const auto& b : shape ? bj : json::array()) {
        SiteSet block;
        if (!b.is_array() || b.empty()) {
          shape = false;
          break;
        }
        for (const auto& s : b) {
          const auto i = resolve(s, labels.sites);
          if (!i) {
            problems.add(where + ": unknown site " + s.dump());
            ok = false;
            continue;
          }
          block = block.with(*i);
        }
        blocks.push_back(block);
      }
      if (!shape) {
        problems.add(where + ": blocks must be a list of nonempty site lists");
        ok = false;
        continue;
      }
      try {
        Partition partition(std::move(blocks));
        if (partition.ground() != SiteSet::full(n)) {
          problems.add(where + ": blocks must cover every site exactly once");
          ok = false;
          continue;
        }
        terms.push_back({std::move(partition), *r});
      } catch (const PreconditionError& e) {
        problems.add(where + ": " + e.what());
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return RecombinationSpec(n, std::move(terms), rho);
  } catch (const PreconditionError& e) {
    problems.add(std::string("recombination: ") + e.what());
  }
  return std::nullopt;
}

CountingMeasure parse_sample(const json& doc, const LabelTable& labels, Problems& problems) {
  CountingMeasure nu;
  const json& sample = doc.contains("sample") ? doc["sample"] : json();
  if (!sample.is_array() || sample.empty()) {
    problems.add("sample: expected a nonempty list of {type, count}");
    return nu;
  }
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const std::string where = "sample[" + std::to_string(k) + "]";
    const json& e = sample[k];
    if (!e.is_object() || !e.contains("type") || !e["type"].is_object() || e["type"].empty()) {
      problems.add(where + ": type must be a nonempty map site -> allele");
      continue;
    }
    long long count = 1;
    if (e.contains("count")) {
      if (!e["count"].is_number_integer() || e["count"].get<long long>() < 1 ||
          e["count"].get<long long>() > 1'000'000) {
        problems.add(where + ": count must be a positive integer");
        continue;
      }
      count = e["count"].get<long long>();
    }
    FuzzyType x;
    bool ok = true;
    for (const auto& [key, value] : e["type"].items()) {
      const auto site = resolve_key(key, labels.sites);
      if (!site) {
        problems.add(where + ": unknown site '" + key + "'");
        ok = false;
        continue;
      }
      const auto allele = resolve(value, labels.alleles[*site]);
      if (!allele) {
        problems.add(where + ": unknown allele " + value.dump() + " at site '" + labels.sites[*site] + "'");
        ok = false;
        continue;
      }
      x.set(*site, AlleleSet::single(*allele));
    }
    if (ok) nu.add(x, static_cast<std::uint32_t>(count));
  }
  return nu;
}

}  // namespace

std::string LabelTable::describe(const FuzzyType& x) const {
  if (x.is_empty_type()) return "eps";
  std::string out;
  for (int i : x.sites()) {
    if (!out.empty()) out += ';';
    out += sites[i] + '=';
    std::string set;
    for (int a : x.at(i)) set += (set.empty() ? "" : "|") + alleles[i][a];
    out += set;
  }
  return out;
}

nlohmann::json LabelTable::to_json() const { return {{"sites", sites}, {"alleles", alleles}}; }

ModelConfig parse_config(const nlohmann::json& doc) {
  Problems problems;
  if (!doc.is_object()) throw ModelError("config: top level must be a JSON object");
  LabelTable labels = parse_labels(doc, problems);
  if (labels.sites.empty()) problems.throw_if_any();

  bool is_list = false;
  std::vector<double> rhos = parse_rhos(doc, problems, is_list);
  auto mutation = parse_mutation(doc, labels, problems);
  auto recombination = parse_recombination(doc, labels, rhos.front(), problems);
  CountingMeasure sample = parse_sample(doc, labels, problems);

  std::optional<Model> model;
  if (mutation && recombination) {
    try {
      model.emplace(std::move(*mutation), std::move(*recombination));
    } catch (const ModelError& e) {
      for (const auto& p : e.problems()) problems.add(p);
    }
  }
  problems.throw_if_any();
  return ModelConfig{std::move(labels), std::move(*model), std::move(rhos), is_list, std::move(sample)};
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("config: cannot read '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(std::string("config: parse error: ") + e.what());
  }
  return parse_config(doc);
}

nlohmann::json ModelConfig::normalized() const {
  json doc;
  doc["sites"] = labels.sites;
  doc["alleles"] = labels.alleles;
  json mutation = json::array();
  for (int i = 0; i < model.sites(); ++i) {
    const auto& k = model.mutation().kernel(i);
    mutation.push_back({{"u", k.rate()}, {"M", k.rows()}});
  }
  doc["mutation"] = mutation;
  json parts = json::array();
  for (const auto& t : model.recombination().terms()) {
    json blocks = json::array();
    for (SiteSet b : t.partition.blocks()) {
      json block = json::array();
      for (int s : b) block.push_back(labels.sites[s]);
      blocks.push_back(block);
    }
    parts.push_back({{"blocks", blocks}, {"r", t.rate}});
  }
  doc["recombination"] = {{"partitions", parts}};
  doc["rho"] = rho_is_list ? json(rhos) : json(rhos.front());
  json sample = json::array();
  for (const auto& [x, c] : this->sample) {
    json type = json::object();
    for (int i : x.sites()) type[labels.sites[i]] = labels.alleles[i][x.at(i).value()];
    sample.push_back({{"type", type}, {"count", c}});
  }
  doc["sample"] = sample;
  return doc;
}

}  // namespace margsim::cli
