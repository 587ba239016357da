#pragma once

#include <stdexcept>
#include <string>

namespace zipmix {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter violates its admissible range; the message names the bound.
struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

// (y, z, n) lies outside the support: some n_ij > 0 with z_ij = 0.
struct SupportViolation : Error {
  explicit SupportViolation(const std::string& msg) : Error(msg) {}
};

// All y_j equal: the split has r = 0 or r = 1 and ratio estimands degenerate.
struct DegenerateSplit : Error {
  explicit DegenerateSplit(const std::string& msg) : Error(msg) {}
};

struct ZeroDenominator : Error {
  explicit ZeroDenominator(const std::string& msg) : Error(msg) {}
};

struct EmptyCell : Error {
  explicit EmptyCell(const std::string& msg) : Error(msg) {}
};

// Posterior mean requested where the second shape index is <= 1.
struct MeanUndefined : Error {
  explicit MeanUndefined(const std::string& msg) : Error(msg) {}
};

// Improper-prior posterior fails its properness condition.
struct ImproperPosterior : Error {
  explicit ImproperPosterior(const std::string& msg) : Error(msg) {}
};

struct DegenerateRatio : Error {
  explicit DegenerateRatio(const std::string& msg) : Error(msg) {}
};

// An EM component has zero total responsibility; the M-step is undefined.
struct EmptyComponent : Error {
  explicit EmptyComponent(const std::string& msg) : Error(msg) {}
};

struct DegenerateData : Error {
  explicit DegenerateData(const std::string& msg) : Error(msg) {}
};

struct AllZeros : Error {
  explicit AllZeros(const std::string& msg) : Error(msg) {}
};

// Information-matrix evaluation requested at a boundary parameter point.
struct BoundaryParams : Error {
  explicit BoundaryParams(const std::string& msg) : Error(msg) {}
};

struct SingularInfo : Error {
  explicit SingularInfo(const std::string& msg) : Error(msg) {}
};

// Fit converged with a clamp active; information-based intervals refused.
struct BoundaryFit : Error {
  explicit BoundaryFit(const std::string& msg) : Error(msg) {}
};

struct SizeLimit : Error {
  explicit SizeLimit(const std::string& msg) : Error(msg) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct NegativeCount : Error {
  explicit NegativeCount(const std::string& msg) : Error(msg) {}
};

struct RaggedRows : Error {
  explicit RaggedRows(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace zipmix
