#pragma once

#include <stdexcept>
#include <string>

namespace evret {

// Error taxonomy, mapped onto process exit codes by the CLI:
//   input_error  -> 1  (malformed files, shape mismatches, domain violations in data)
//   numerical_error -> 2  (non-convergence under --strict, non-finite intermediates)
//   config_error -> 3  (out-of-range or unknown configuration)
class input_error : public std::runtime_error {
public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Fusing two opinions whose belief masses are fully contradictory leaves the
// combination rule with a zero normalizer; callers may want to catch this
// separately from generic numeric trouble.
class total_conflict_error : public numerical_error {
public:
  explicit total_conflict_error(const std::string& what) : numerical_error(what) {}
};

// An opinion with zero uncertainty cannot be mapped back to finite Dirichlet
// parameters.
class degenerate_opinion_error : public input_error {
public:
  explicit degenerate_opinion_error(const std::string& what) : input_error(what) {}
};

}  // namespace evret
