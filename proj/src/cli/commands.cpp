#include "margsim/cli/commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "margsim/asymptotics.hpp"
#include "margsim/montecarlo.hpp"

namespace margsim::cli {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<double> rhos_for(const ModelConfig& config, const Flags& flags) {
  return flags.rhos.empty() ? config.rhos : flags.rhos;
}

McOptions mc_options(const Flags& flags) {
  McOptions o;
  o.reps = flags.reps;
  o.seed = flags.seed;
  o.threads = flags.threads;
  return o;
}

const char* side_name(Side s) {
  switch (s) {
    case Side::Both:
      return "both";
    case Side::Left:
      return "left";
    case Side::Right:
      return "right";
  }
  return "?";
}

EventSink event_logger(std::ostream& log, const LabelTable& labels, double rho) {
  return [&log, &labels, rho](const EventRecord& r) {
    log << "event rho=" << num(rho) << " rep=0 t=" << num(r.time) << ' ' << to_string(r.kind) << ' '
        << side_name(r.side) << ' ' << labels.describe(r.first);
    if (!r.second.is_empty_type()) log << ' ' << labels.describe(r.second);
    if (r.site >= 0) log << " site=" << labels.sites[r.site];
    log << '\n';
  };
}

// Replays replicate 0 with an event sink; the replay uses the same stream.
template <typename Run>
void log_replicate_zero(const Flags& flags, std::ostream& log, const LabelTable& labels, double rho, Run&& run) {
  if (!flags.verbose_events) return;
  SimOptions sim;
  sim.on_event = event_logger(log, labels, rho);
  Rng rng(flags.seed, 0);
  run(rng, sim);
}

std::string run_exact(const ModelConfig& config, const Flags& flags) {
  std::ostringstream out;
  out << kExactHeader << '\n';
  for (double rho : rhos_for(config, flags)) {
    const Model model = config.model.with_rho(rho);
    const StateGraph graph = build_state_graph(config.sample, model, Dynamics::Marg, flags.state_cap);
    const AbsorptionSolution sol = solve_q(graph);
    out << num(rho) << ',' << num(sol.root()) << ',' << graph.size() << ',' << num(sol.residual) << '\n';
  }
  return out.str();
}

std::string run_mc(const ModelConfig& config, const Flags& flags, std::ostream& log) {
  std::ostringstream out;
  out << kMcHeader << '\n';
  for (double rho : rhos_for(config, flags)) {
    const Model model = config.model.with_rho(rho);
    log_replicate_zero(flags, log, config.labels, rho,
                       [&](Rng& rng, const SimOptions& sim) { simulate(ProcessState(config.sample), model, rng, sim); });
    const Estimate e = estimate_q(config.sample, model, mc_options(flags));
    out << num(rho) << ',' << num(e.mean) << ',' << num(e.stderr_) << ',' << e.reps << ',' << e.seed << ','
        << num(e.wall_seconds) << '\n';
  }
  return out.str();
}

std::string run_asymptotic(const ModelConfig& config, const Flags& flags) {
  const SingleSiteQ ssq(config.model.mutation(), SingleSiteQ::Backend::Auto, flags.state_cap);
  const auto& spec = config.model.recombination();
  const CountingMeasure& nu = config.sample;
  nlohmann::json doc;
  doc["labels"] = config.labels.to_json();
  const double qi = q_infty(nu, ssq);
  const double first = q1(nu, spec, ssq);
  doc["q_infty"] = qi;
  doc["q1"] = first;
  doc["q1_via_decomposition"] = q1_via_decomposition(nu, spec, ssq);
  doc["prob_F1"] = prob_F1(nu, spec);
  doc["prob_F2"] = prob_F2(nu, spec);
  nlohmann::json f1x = nlohmann::json::array();
  for (const auto& x : f1_witnesses(nu)) {
    f1x.push_back({{"witness", config.labels.describe(x)}, {"value", prob_F1x(nu, x, spec)}});
  }
  doc["prob_F1x"] = f1x;
  nlohmann::json f2 = nlohmann::json::array();
  for (const auto& [i, a] : f2_witnesses(nu)) {
    f2.push_back({{"site", config.labels.sites[i]},
                  {"allele", config.labels.alleles[i][a]},
                  {"value", prob_F2ixi(nu, i, a, spec)}});
  }
  doc["prob_F2ixi"] = f2;
  nlohmann::json expansion = nlohmann::json::array();
  for (double rho : rhos_for(config, flags)) expansion.push_back({{"rho", rho}, {"q_first_order", qi + first / rho}});
  doc["expansion"] = expansion;
  return doc.dump(2) + "\n";
}

void couple_row(std::ostream& out, const CouplingStats& s, double rho, const std::string& event,
                const std::string& witness, const EventTally& t, std::optional<double> coefficient) {
  const Proportion p = s.frequency(t);
  out << num(rho) << ',' << event << ',' << witness << ',' << t.count << ',' << num(p.value) << ',' << num(p.stderr_)
      << ',' << num(rho * p.value) << ',' << num(rho * p.stderr_) << ',' << num(coefficient);
  for (const Conditional& c : {CouplingStats::conditional_q(t), CouplingStats::conditional_q_infty(t)}) {
    if (c.sufficient) {
      out << ',' << num(c.mean) << ',' << num(c.stderr_);
    } else {
      out << ",insufficient,insufficient";
    }
  }
  out << '\n';
}

std::string run_couple_stats(const ModelConfig& config, const Flags& flags, std::ostream& log) {
  const auto& spec = config.model.recombination();
  const CountingMeasure& nu = config.sample;
  const double f1 = prob_F1(nu, spec);
  const double f2 = prob_F2(nu, spec);
  std::ostringstream out;
  out << kCoupleHeader << '\n';
  for (double rho : rhos_for(config, flags)) {
    const Model model = config.model.with_rho(rho);
    log_replicate_zero(flags, log, config.labels, rho,
                       [&](Rng& rng, const SimOptions& sim) { simulate(CoupledState::start(nu), model, rng, sim); });
    const CouplingStats s = estimate_coupling(nu, model, mc_options(flags));
    couple_row(out, s, rho, "all", "", s.all, std::nullopt);
    couple_row(out, s, rho, "E", "", s.E, std::nullopt);
    couple_row(out, s, rho, "not_E", "", s.not_E, std::nullopt);
    couple_row(out, s, rho, "F", "", s.F, f1 + f2);
    couple_row(out, s, rho, "F1", "", s.F1, f1);
    couple_row(out, s, rho, "F2", "", s.F2, f2);
    couple_row(out, s, rho, "neither", "", s.neither, std::nullopt);
    for (const auto& x : f1_witnesses(nu)) {
      auto it = s.F1x.find(x);
      couple_row(out, s, rho, "F1x", config.labels.describe(x), it == s.F1x.end() ? EventTally{} : it->second,
                 prob_F1x(nu, x, spec));
    }
    for (const auto& w : f2_witnesses(nu)) {
      auto it = s.F2ixi.find(w);
      const FuzzyType xi = FuzzyType().set(w.first, AlleleSet::single(w.second));
      couple_row(out, s, rho, "F2ixi", config.labels.describe(xi), it == s.F2ixi.end() ? EventTally{} : it->second,
                 prob_F2ixi(nu, w.first, w.second, spec));
    }
  }
  return out.str();
}

std::string run_validate(const ModelConfig& config, const Flags& flags) {
  const SingleSiteQ ssq(config.model.mutation(), SingleSiteQ::Backend::Auto, flags.state_cap);
  SweepOptions options;
  options.mc = mc_options(flags);
  options.state_cap = flags.state_cap;
  const auto rhos = rhos_for(config, flags);
  std::ostringstream out;
  out << kValidateHeader << '\n';
  for (const SweepRow& r : rho_sweep(config.sample, config.model, rhos, options, ssq)) {
    out << num(r.rho) << ',' << num(r.mc ? std::optional(r.mc->mean) : std::nullopt) << ','
        << num(r.mc ? std::optional(r.mc->stderr_) : std::nullopt) << ',' << num(r.q_exact) << ',' << num(r.q_infty)
        << ',' << num(r.q1) << ',' << num(r.scaled_residual()) << ',' << num(r.scaled_residual_stderr()) << ','
        << num(r.scaled_residual_exact()) << ',' << num(r.order_residual_exact()) << '\n';
  }
  return out.str();
}

// Writes beside the target and renames, so readers never see partial files.
void write_atomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ModelError("cannot write '" + path + "'");
    f << text;
    f.flush();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ModelError("cannot write '" + path + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ModelError("cannot write '" + path + "'");
  }
}

}  // namespace

std::string execute(const std::string& command, const ModelConfig& config, const Flags& flags, std::ostream& log) {
  if (command == "exact") return run_exact(config, flags);
  if (command == "mc") return run_mc(config, flags, log);
  if (command == "asymptotic") return run_asymptotic(config, flags);
  if (command == "couple-stats") return run_couple_stats(config, flags, log);
  if (command == "validate") return run_validate(config, flags);
  throw PreconditionError("unknown command '" + command + "'");
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and exact/asymptotic evaluation of measure-valued ancestral recombination graphs"};
  Flags flags;
  std::string command;
  std::string config_path;
  std::string rho_sweep;
  std::optional<double> rho;
  app.add_option("command", command, "Subcommand")->required()->check(CLI::IsMember(kCommands));
  app.add_option("config", config_path, "Model config (JSON)")->required();
  app.add_option("--seed", flags.seed, "Base seed")->capture_default_str();
  app.add_option("--reps", flags.reps, "Replicates per rho")->check(CLI::PositiveNumber)->capture_default_str();
  auto* rho_opt = app.add_option("--rho", rho, "Single rho, overrides the config")->check(CLI::PositiveNumber);
  app.add_option("--rho-sweep", rho_sweep, "Comma-separated rho list, overrides the config")->excludes(rho_opt);
  app.add_option("--out", flags.out, "Output file (default: stdout)");
  app.add_option("--threads", flags.threads, "Worker threads (0: MARGSIM_THREADS or all cores)");
  app.add_option("--state-cap", flags.state_cap, "State cap for exact solves")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--verbose-events", flags.verbose_events, "Log the events of replicate 0 to stderr");
  app.add_option("--dump-normalized", flags.dump_normalized, "Write the normalized config to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::vector<std::string> written;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
  };
  try {
    if (rho) flags.rhos = {*rho};
    if (!rho_sweep.empty()) {
      std::stringstream ss(rho_sweep);
      for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(item, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != item.size() || !(v > 0.0) || !std::isfinite(v)) {
          throw PreconditionError("--rho-sweep: '" + item + "' is not a positive number");
        }
        flags.rhos.push_back(v);
      }
    }
    const ModelConfig config = load_config(config_path);
    for (const auto& w : config.model.recombination().warnings()) err << "warning: " << w << '\n';
    if (!flags.dump_normalized.empty()) {
      write_atomically(flags.dump_normalized, config.normalized().dump(2) + "\n");
      written.push_back(flags.dump_normalized);
    }
    const std::string text = execute(command, config, flags, err);
    if (flags.out.empty()) {
      out << text;
    } else {
      write_atomically(flags.out, text);
    }
    return kExitOk;
  } catch (const ModelError& e) {
    cleanup();
    err << "error: invalid model:\n";
    for (const auto& p : e.problems()) err << "  " << p << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    cleanup();
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResourceCapError& e) {
    cleanup();
    err << "error: resource cap: " << e.what() << '\n';
    return kExitResourceCap;
  } catch (const std::exception& e) {
    cleanup();
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace margsim::cli
