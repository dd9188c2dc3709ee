#include "margsim/mutation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace margsim {

MutationKernel::MutationKernel(double rate, std::vector<std::vector<double>> rows)
    : rate_(rate), alleles_(static_cast<int>(rows.size())) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw ModelError("mutation rate must be >= 0");
  if (alleles_ < 1 || alleles_ > kMaxAlleles) {
    throw ModelError("mutation kernel size " + std::to_string(alleles_) + " outside 1.." +
                     std::to_string(kMaxAlleles));
  }
  std::vector<std::string> problems;
  matrix_.resize(static_cast<std::size_t>(alleles_) * alleles_);
  for (int a = 0; a < alleles_; ++a) {
    if (static_cast<int>(rows[a].size()) != alleles_) {
      problems.push_back("kernel row " + std::to_string(a) + " has wrong length");
      continue;
    }
    double sum = 0.0;
    for (double v : rows[a]) {
      if (!(v >= 0.0) || !std::isfinite(v)) problems.push_back("kernel row " + std::to_string(a) + " has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      problems.push_back("kernel row " + std::to_string(a) + " sums to " + std::to_string(sum));
      continue;
    }
    // Exactly stochastic rows are kept bit-for-bit.
    for (int b = 0; b < alleles_; ++b) matrix_[a * alleles_ + b] = sum == 1.0 ? rows[a][b] : rows[a][b] / sum;
  }
  if (!problems.empty()) throw ModelError(std::move(problems));
}

MutationKernel MutationKernel::parent_independent(double rate, std::vector<double> row) {
  std::vector<std::vector<double>> rows(row.size(), row);
  return MutationKernel(rate, std::move(rows));
}

std::vector<std::vector<double>> MutationKernel::rows() const {
  std::vector<std::vector<double>> out(alleles_, std::vector<double>(alleles_));
  for (int a = 0; a < alleles_; ++a)
    for (int b = 0; b < alleles_; ++b) out[a][b] = (*this)(a, b);
  return out;
}

bool MutationKernel::is_parent_independent(double tol) const {
  for (int a = 1; a < alleles_; ++a)
    for (int b = 0; b < alleles_; ++b)
      if (std::abs((*this)(a, b) - (*this)(0, b)) > tol) return false;
  return true;
}

bool MutationKernel::is_irreducible() const {
  auto reach_all = [&](bool transpose) {
    std::vector<bool> seen(alleles_, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      for (int b = 0; b < alleles_; ++b) {
        double w = transpose ? (*this)(b, a) : (*this)(a, b);
        if (b != a && w > 0.0 && !seen[b]) {
          seen[b] = true;
          stack.push_back(b);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
  };
  return reach_all(false) && reach_all(true);
}

std::vector<double> stationary(const MutationKernel& kernel) {
  if (!kernel.is_irreducible()) throw ModelError("mutation kernel is reducible");
  const int k = kernel.alleles();
  if (k == 1) return {1.0};
  // Rows 0..k-1: (Mᵀ - I)π = 0; the first equation is replaced by Σπ = 1.
  Eigen::MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = kernel(j, i) - (i == j ? 1.0 : 0.0);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  a.row(0).setOnes();
  rhs(0) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd pi = lu.solve(rhs);
  // One step of iterative refinement.
  pi += lu.solve(rhs - a * pi);
  std::vector<double> out(pi.data(), pi.data() + k);
  for (double v : out) {
    if (!(v > 0.0)) throw ModelError("mutation kernel has a non-positive stationary weight");
  }
  return out;
}

AlleleSet preimage_alleles(AlleleSet current, int from, int to) {
  return current.contains(to) ? current.with(from) : current.without(from);
}

std::optional<FuzzyType> mutation_preimage(const FuzzyType& x, int site, int from, int to) {
  if (!x.sites().contains(site)) throw PreconditionError("mutation_preimage: site not observed");
  AlleleSet next = preimage_alleles(x.at(site), from, to);
  if (next.empty()) return std::nullopt;
  FuzzyType y = x;
  y.set(site, next);
  return y;
}

std::optional<std::string> irreducibility_problem(const MutationKernel& k) {
  if (k.rate() == 0.0 && k.alleles() > 1) {
    return "mutation rate 0 with " + std::to_string(k.alleles()) + " alleles makes the mutation chain reducible";
  }
  try {
    margsim::stationary(k);
  } catch (const ModelError& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

MutationModel::MutationModel(std::vector<MutationKernel> kernels) : kernels_(std::move(kernels)) {
  std::vector<std::string> problems;
  for (int i = 0; i < sites(); ++i) {
    if (auto p = irreducibility_problem(kernels_[i])) problems.push_back("site " + std::to_string(i) + ": " + *p);
  }
  if (!problems.empty()) throw ModelError(std::move(problems));
  for (const auto& k : kernels_) stationary_.push_back(margsim::stationary(k));

  moves_.resize(sites());
  for (int i = 0; i < sites(); ++i) {
    const auto& k = kernels_[i];
    const int sets = 1 << k.alleles();
    moves_[i].resize(sets);
    for (int mask = 1; mask < sets; ++mask) {
      AlleleSet cur = AlleleSet::from_bits(mask);
      auto& list = moves_[i][mask];
      for (int y = 0; y < k.alleles(); ++y) {
        for (int z = 0; z < k.alleles(); ++z) {
          double rate = k.rate() * k(y, z);
          if (rate <= 0.0) continue;
          AlleleSet next = preimage_alleles(cur, y, z);
          if (next == cur) continue;
          auto it = std::find_if(list.begin(), list.end(), [&](const AlleleMove& m) { return m.result == next; });
          if (it == list.end()) {
            list.push_back({next, rate});
          } else {
            it->rate += rate;
          }
        }
      }
      std::sort(list.begin(), list.end(), [](const AlleleMove& a, const AlleleMove& b) { return a.result < b.result; });
    }
  }
}

double MutationModel::pi(int site, AlleleSet alleles) const {
  const auto& p = stationary_.at(site);
  double s = 0.0;
  for (int a : alleles) s += p.at(a);
  return s;
}

double root_weight(const CountingMeasure& nu, const MutationModel& mutation) {
  if (!is_simple(nu)) throw PreconditionError("root_weight: measure is not simple");
  double w = 1.0;
  for (const auto& [x, c] : nu) {
    for (int i : x.sites()) w *= mutation.pi(i, x.at(i));
  }
  return w;
}

double root_weight(const ProcessState& state, const MutationModel& mutation) {
  return state.is_cemetery() ? 0.0 : root_weight(state.measure(), mutation);
}

}  // namespace margsim
