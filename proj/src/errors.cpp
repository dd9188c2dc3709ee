#include "margsim/errors.hpp"

namespace margsim {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg;
  for (const auto& p : problems) {
    if (!msg.empty()) msg += "; ";
    msg += p;
  }
  return msg.empty() ? std::string("invalid model") : msg;
}

}  // namespace

ModelError::ModelError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace margsim
