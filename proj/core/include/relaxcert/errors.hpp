#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relaxcert {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input does not satisfy an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Parameter range outside [0, 1] or inverted.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Dimensions of a point do not match its model.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A modelling assumption required by a certificate fails (e.g. the line
/// current limit at a given edge).
class CertificateError : public Error {
 public:
  CertificateError(const std::string& what, std::ptrdiff_t edge = -1)
      : Error(what), edge_(edge) {}
  std::ptrdiff_t edge() const noexcept { return edge_; }

 private:
  std::ptrdiff_t edge_;
};

/// A constructed path failed one of its own post-checks. Under validated
/// assumptions this is unreachable; seeing it means a bug.
class CertificateViolation : public Error {
 public:
  CertificateViolation(const std::string& what, std::ptrdiff_t sample = -1)
      : Error(what), sample_(sample) {}
  std::ptrdiff_t sample() const noexcept { return sample_; }

 private:
  std::ptrdiff_t sample_;
};

/// Rank reduction found no nonzero cost/constraint preserving direction.
class ReductionStuck : public Error {
 public:
  ReductionStuck(const std::string& what, std::size_t stage)
      : Error(what), stage_(stage) {}
  std::size_t stage() const noexcept { return stage_; }

 private:
  std::size_t stage_;
};

/// A combinator hypothesis (path coincidence, block separability) failed on
/// a sampled point.
class CompositionError : public Error {
 public:
  using Error::Error;
};

/// A caller-declared property (monotone, convex) failed a spot check.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The brute-force oracle refuses problems above its dimension guard.
class RefusalError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace relaxcert
