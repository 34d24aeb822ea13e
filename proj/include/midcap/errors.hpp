#pragma once

#include <stdexcept>
#include <string>

namespace midcap {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input file header does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A row failed to parse; the message carries the file and line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A value violated a documented range or consistency rule.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Two active primary links claim the same (permno, date).
class AmbiguousLinkError : public Error {
 public:
  using Error::Error;
};

// Every feature in a cross-section was degenerate.
class EmptyMatrixError : public Error {
 public:
  using Error::Error;
};

// Least-squares system is singular and no ridge was requested.
class SingularFitError : public Error {
 public:
  using Error::Error;
};

// Feature names disagree between a matrix and a coefficient vector,
// or two return series share no dates.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// No stock passed the history filter at a rebalance date.
class EmptyUniverseError : public Error {
 public:
  using Error::Error;
};

// Covariance factorization failed; regularize upstream.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

// Fewer than two assets: a dollar-neutral portfolio is identically zero.
class DegenerateUniverseError : public Error {
 public:
  using Error::Error;
};

// Too few observations for a statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Return series has zero variance.
class UndefinedSharpeError : public Error {
 public:
  using Error::Error;
};

// Panel does not cover a requested phase window.
class MissingRangeError : public Error {
 public:
  using Error::Error;
};

// A nonzero weight has no price to trade against.
class PositionError : public Error {
 public:
  using Error::Error;
};

// Bad config file: unknown key, unparseable value, missing file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace midcap
