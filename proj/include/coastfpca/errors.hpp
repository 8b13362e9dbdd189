#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coastfpca {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- ingestion ---
class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t row, const std::string& reason)
      : Error("malformed row " + std::to_string(row) + ": " + reason), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class MissingColumn : public Error {
 public:
  explicit MissingColumn(const std::string& detail) : Error("missing column: " + detail) {}
};

class DuplicateSiteId : public Error {
 public:
  explicit DuplicateSiteId(const std::string& id) : Error("duplicate site id: " + id) {}
};

class CoordinateOutOfRange : public Error {
 public:
  explicit CoordinateOutOfRange(const std::string& detail)
      : Error("coordinate out of range: " + detail) {}
};

class UnmappedSite : public Error {
 public:
  explicit UnmappedSite(const std::string& id) : Error("site not in covariate map: " + id) {}
};

// --- preprocessing ---
class NonPositiveValue : public Error {
 public:
  NonPositiveValue(int week, double value)
      : Error("non-positive value " + std::to_string(value) + " at week " + std::to_string(week)),
        week_(week) {}
  int week() const { return week_; }

 private:
  int week_;
};

// --- smoothing ---
class DegenerateLocalDesign : public Error {
 public:
  explicit DegenerateLocalDesign(std::size_t eval_index)
      : Error("degenerate local design at evaluation point " + std::to_string(eval_index) +
              "; widen the bandwidth"),
        eval_index_(eval_index) {}
  std::size_t eval_index() const { return eval_index_; }

 private:
  std::size_t eval_index_;
};

class AllCandidatesDegenerate : public Error {
 public:
  AllCandidatesDegenerate() : Error("no bandwidth candidate yields a feasible fit") {}
};

// --- fpca ---
class NoPositiveEigenvalues : public Error {
 public:
  NoPositiveEigenvalues() : Error("covariance surface has no positive eigenvalues") {}
};

class EmptySeries : public Error {
 public:
  explicit EmptySeries(const std::string& id) : Error("series has no observations: " + id) {}
};

class NotDense : public Error {
 public:
  explicit NotDense(const std::string& id)
      : Error("series is not observed at every grid point: " + id) {}
};

// --- association ---
class InsufficientData : public Error {
 public:
  explicit InsufficientData(std::size_t n)
      : Error("need at least 3 complete pairs, got " + std::to_string(n)) {}
};

class ZeroVariance : public Error {
 public:
  explicit ZeroVariance(const std::string& which) : Error("all values tied in " + which) {}
};

class ConstantPredictor : public Error {
 public:
  ConstantPredictor() : Error("predictor is constant") {}
};

class TooFewSites : public Error {
 public:
  TooFewSites(std::size_t n, std::size_t bins)
      : Error("cannot split " + std::to_string(n) + " sites into " + std::to_string(bins) +
              " bins") {}
};

class InsufficientOverlap : public Error {
 public:
  explicit InsufficientOverlap(const std::string& id)
      : Error("fewer than 3 common weeks for site " + id) {}
};

// --- synthesis ---
class InvalidParams : public Error {
 public:
  explicit InvalidParams(const std::string& detail) : Error("invalid parameters: " + detail) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& detail)
      : Error("dimension mismatch: " + detail) {}
};

// --- export / pipeline ---
class MissingCoordinates : public Error {
 public:
  explicit MissingCoordinates(const std::string& sites)
      : Error("sites without coordinates: " + sites) {}
};

class PipelineError : public Error {
 public:
  PipelineError(const std::string& stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace coastfpca
