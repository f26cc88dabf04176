#ifndef DICE_ERRORS_HPP_
#define DICE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dice {

// Bad configuration or contract violation (wrong dimensions, invalid keys).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric guard: a loss, gradient, or parameter became non-finite. Trainers
// convert this into a clean, recorded termination of the run.
class TrainAbort : public std::runtime_error {
 public:
  TrainAbort(const std::string& reason, long iteration)
      : std::runtime_error(reason), reason(reason), iteration(iteration) {}
  std::string reason;
  long iteration;
};

}  // namespace dice

#endif  // DICE_ERRORS_HPP_
