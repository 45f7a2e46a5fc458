#include "gradlab/solver.hpp"

namespace gradlab {

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged:
      return "converged";
    case RunStatus::MaxIters:
      return "max_iters";
    case RunStatus::Degenerate:
      return "degenerate";
  }
  return "unknown";
}

std::string to_string(GradientMode mode) {
  return mode == GradientMode::Recursive ? "recursive" : "iterates";
}

}  // namespace gradlab
