#include "margsim/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace margsim {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs `body(begin, end)` over fixed replicate blocks on a worker pool and
// folds the block results in block order, so the result does not depend on
// the worker count.
template <typename Acc, typename Body>
Acc run_blocks(const McOptions& options, Body&& body) {
  if (options.reps == 0) throw PreconditionError("replicate count must be positive");
  const std::uint64_t block = std::max<std::uint64_t>(options.block_size, 1);
  const std::uint64_t blocks = (options.reps + block - 1) / block;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(options.threads), blocks));

  std::vector<Acc> partial(blocks);
  std::vector<std::exception_ptr> errors(blocks);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::uint64_t b; !failed.load(std::memory_order_relaxed) && (b = next.fetch_add(1)) < blocks;) {
      try {
        partial[b] = body(b * block, std::min(options.reps, (b + 1) * block));
      } catch (...) {
        errors[b] = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Acc total;
  for (auto& p : partial) total.merge(p);
  return total;
}

// Rewraps a failing replicate's cap or internal error with its index.
template <typename F>
auto tagged(std::uint64_t replicate, F&& f) {
  try {
    return f();
  } catch (const ResourceCapError& e) {
    throw ResourceCapError("replicate " + std::to_string(replicate) + ": " + e.what());
  } catch (const InternalError& e) {
    throw InternalError("replicate " + std::to_string(replicate) + ": " + e.what());
  }
}

struct MomentsAcc {
  Moments m;
  void merge(const MomentsAcc& other) { m.merge(other.m); }
};

struct CouplingAcc {
  CouplingStats s;
  void merge(const CouplingAcc& other) { s.merge(other.s); }
};

void merge_min_max(Moments& into, double lo, double hi, bool first) {
  into.min = first ? lo : std::min(into.min, lo);
  into.max = first ? hi : std::max(into.max, hi);
}

}  // namespace

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

void CompensatedSum::add(const CompensatedSum& other) {
  add(other.sum_);
  add(other.compensation_);
}

void Moments::add(double x) {
  merge_min_max(*this, x, x, count == 0);
  ++count;
  sum.add(x);
  sum_squares.add(x * x);
}

void Moments::merge(const Moments& other) {
  if (other.count == 0) return;
  merge_min_max(*this, other.min, other.max, count == 0);
  count += other.count;
  sum.add(other.sum);
  sum_squares.add(other.sum_squares);
}

double Moments::mean() const { return count == 0 ? 0.0 : sum.value() / static_cast<double>(count); }

double Moments::standard_error() const {
  if (count < 2 || min == max) return 0.0;
  const double n = static_cast<double>(count);
  const double m = mean();
  const double var = std::max(0.0, (sum_squares.value() - n * m * m) / (n - 1.0));
  return std::sqrt(var / n);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MARGSIM_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Estimate estimate_q(const CountingMeasure& nu, const Model& model, const McOptions& options) {
  model.check_measure(nu);
  const auto start = Clock::now();
  const ProcessState initial(nu);
  const MomentsAcc acc = run_blocks<MomentsAcc>(options, [&](std::uint64_t begin, std::uint64_t end) {
    MomentsAcc a;
    for (std::uint64_t k = begin; k < end; ++k) {
      Rng rng(options.seed, k);
      a.m.add(tagged(k, [&] { return simulate(initial, model, rng, options.sim).q; }));
    }
    return a;
  });
  return {acc.m.mean(), acc.m.standard_error(), acc.m.count, options.seed, seconds_since(start)};
}

Estimate estimate_q_infty(const CountingMeasure& nu, const MutationModel& mutation, const McOptions& options) {
  const auto start = Clock::now();
  const ProcessState initial(sigma(nu));
  const MomentsAcc acc = run_blocks<MomentsAcc>(options, [&](std::uint64_t begin, std::uint64_t end) {
    MomentsAcc a;
    for (std::uint64_t k = begin; k < end; ++k) {
      Rng rng(options.seed, k);
      a.m.add(tagged(k, [&] { return simulate_split(initial, mutation, rng, options.sim).q_infty; }));
    }
    return a;
  });
  return {acc.m.mean(), acc.m.standard_error(), acc.m.count, options.seed, seconds_since(start)};
}

void EventTally::add(const RunOutcome& run) {
  ++count;
  q.add(run.q);
  q_infty.add(run.q_infty);
}

void EventTally::merge(const EventTally& other) {
  count += other.count;
  q.merge(other.q);
  q_infty.merge(other.q_infty);
}

void CouplingStats::add(const RunOutcome& run) {
  ++reps;
  all.add(run);
  if (run.E) E.add(run);
  else not_E.add(run);
  if (run.F) F.add(run);
  if (run.F1) F1.add(run);
  if (run.F2) F2.add(run);
  if (!run.E && !run.F) neither.add(run);
  if (run.f1_witness) F1x[*run.f1_witness].add(run);
  if (run.f2_witness) F2ixi[*run.f2_witness].add(run);
  for (int k = 0; k < kEventKinds; ++k) event_counts[k] += run.event_counts[k];
}

void CouplingStats::merge(const CouplingStats& other) {
  reps += other.reps;
  all.merge(other.all);
  E.merge(other.E);
  F.merge(other.F);
  F1.merge(other.F1);
  F2.merge(other.F2);
  not_E.merge(other.not_E);
  neither.merge(other.neither);
  for (const auto& [x, t] : other.F1x) F1x[x].merge(t);
  for (const auto& [x, t] : other.F2ixi) F2ixi[x].merge(t);
  for (int k = 0; k < kEventKinds; ++k) event_counts[k] += other.event_counts[k];
}

Proportion CouplingStats::frequency(const EventTally& tally) const {
  if (reps == 0) return {};
  const double n = static_cast<double>(reps);
  const double p = static_cast<double>(tally.count) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

Conditional CouplingStats::conditional_q(const EventTally& tally) {
  return {tally.count >= kMinConditionalEvents, tally.q.mean(), tally.q.standard_error()};
}

Conditional CouplingStats::conditional_q_infty(const EventTally& tally) {
  return {tally.count >= kMinConditionalEvents, tally.q_infty.mean(), tally.q_infty.standard_error()};
}

CouplingStats estimate_coupling(const CountingMeasure& nu, const Model& model, const McOptions& options) {
  model.check_measure(nu);
  const auto start = Clock::now();
  const CoupledState initial = CoupledState::start(nu);
  CouplingAcc acc = run_blocks<CouplingAcc>(options, [&](std::uint64_t begin, std::uint64_t end) {
    CouplingAcc a;
    for (std::uint64_t k = begin; k < end; ++k) {
      Rng rng(options.seed, k);
      a.s.add(tagged(k, [&] { return simulate(initial, model, rng, options.sim); }));
    }
    return a;
  });
  acc.s.seed = options.seed;
  acc.s.wall_seconds = seconds_since(start);
  return acc.s;
}

std::optional<double> SweepRow::scaled_residual() const {
  if (!mc) return std::nullopt;
  return rho * (mc->mean - q_infty);
}

std::optional<double> SweepRow::scaled_residual_stderr() const {
  if (!mc) return std::nullopt;
  return rho * mc->stderr_;
}

std::optional<double> SweepRow::scaled_residual_exact() const {
  if (!q_exact) return std::nullopt;
  return rho * (*q_exact - q_infty);
}

std::optional<double> SweepRow::order_residual_exact() const {
  const auto s = scaled_residual_exact();
  if (!s) return std::nullopt;
  return std::abs(*s - q1);
}

std::vector<SweepRow> rho_sweep(const CountingMeasure& nu, const Model& model, std::span<const double> rhos,
                                const SweepOptions& options, const SingleSiteQ& ssq) {
  model.check_measure(nu);
  const double qi = q_infty(nu, ssq);
  const double first_order = q1(nu, model.recombination(), ssq);
  std::vector<SweepRow> rows;
  for (double rho : rhos) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw PreconditionError("rho must be positive and finite");
    const Model at = model.with_rho(rho);
    SweepRow row;
    row.rho = rho;
    row.q_infty = qi;
    row.q1 = first_order;
    if (options.run_mc) row.mc = estimate_q(nu, at, options.mc);
    if (options.run_exact) {
      try {
        row.q_exact = exact_q(nu, at, options.state_cap);
      } catch (const ResourceCapError&) {
        row.q_exact.reset();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace margsim
