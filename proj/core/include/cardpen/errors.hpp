#pragma once

#include <stdexcept>
#include <string>

namespace cardpen {

// Error classes map one-to-one onto the CLI exit-code taxonomy.

/// Malformed input text (matrix files, flag values).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that parses but violates a precondition (asymmetric, not PSD,
/// out-of-range penalty, infeasible blocks, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A size guard refused the request (brute-force cap, SDP size cap).
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative numerical kernel did not converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cardpen
