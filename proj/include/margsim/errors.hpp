#ifndef MARGSIM_ERRORS_HPP_
#define MARGSIM_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace margsim {

// Violated function precondition (caller bug or malformed input to an op).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Model data that fails validation: caps, stochasticity, irreducibility,
// separation. Carries every problem found, not just the first.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(std::vector<std::string> problems);
  explicit ModelError(const std::string& problem)
      : ModelError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// A configurable resource cap (state count, step count) was exceeded.
class ResourceCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Should be unreachable; signals a bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace margsim

#endif  // MARGSIM_ERRORS_HPP_
