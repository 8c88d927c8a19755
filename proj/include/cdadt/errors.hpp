#pragma once

#include <stdexcept>
#include <string>

namespace cdadt {

// Shape or size mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input violated a symmetry precondition beyond the allowed slack.
struct NotSymmetricError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A matrix required to be positive definite failed the spectral cutoff.
struct NotSpdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A basis expected to have full column rank (under the metric) collapsed.
struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Graph construction or validation failure (disconnected, bad sizes, ...).
struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Problem assembly failure (e.g. the summed metric is not positive definite).
struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A solver iterate became non-finite; carries the iteration it happened at.
struct DivergenceError : std::runtime_error {
  long iteration;
  DivergenceError(long iter, const std::string& what)
      : std::runtime_error(what), iteration(iter) {}
};

// File or file-format failure outside the CSV loader (manifests, reports).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CSV loader failures, one subclass per distinguishable condition.
struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CsvIoError : CsvError {
  using CsvError::CsvError;
};
struct CsvEmptyError : CsvError {
  using CsvError::CsvError;
};
struct CsvRaggedError : CsvError {
  using CsvError::CsvError;
};
struct CsvParseError : CsvError {
  using CsvError::CsvError;
};

}  // namespace cdadt
