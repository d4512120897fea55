#pragma once

#include <stdexcept>
#include <string>

namespace singopt {

// Estimator region produced no usable samples.
struct EmptyRegionError : std::runtime_error {
  explicit EmptyRegionError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative subproblem solver hit its iteration cap.
struct SubsolverStallError : std::runtime_error {
  explicit SubsolverStallError(const std::string& what) : std::runtime_error(what) {}
};

// Too few usable entries to fit anything.
struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

// Requested check does not apply to the given trace.
struct NotApplicableError : std::runtime_error {
  explicit NotApplicableError(const std::string& what) : std::runtime_error(what) {}
};

// Least-squares fit has degenerate spread.
struct IllConditionedFitError : std::runtime_error {
  explicit IllConditionedFitError(const std::string& what) : std::runtime_error(what) {}
};

// Trace is missing fields required by an analysis.
struct IncompleteTraceError : std::runtime_error {
  explicit IncompleteTraceError(const std::string& what) : std::runtime_error(what) {}
};

// Bad experiment configuration (parse or semantic).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace singopt
