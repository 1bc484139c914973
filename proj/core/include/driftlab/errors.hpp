#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Input file could not be parsed (carries a line number where known).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line = 0)
      : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Structurally well-formed input whose declared layout is inconsistent
// (e.g. a feature file whose dimension disagrees with the manifest header).
class FormatError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data violates a documented invariant (duplicate id, zero anchor, ...).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A required key/word is missing from a lookup table.
class LookupError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke a precondition (dimension mismatch, empty required set).
class ContractError : public std::logic_error {
  using std::logic_error::logic_error;
};

// Optimization produced a non-finite loss; carries the epoch it happened at.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, int epoch)
      : std::runtime_error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Configuration rejected before any work started.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace driftlab
