#pragma once

#include <stdexcept>
#include <string>

namespace kinkfield {

/// Tensor shapes or virtual bonds do not line up.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad call arguments (out-of-range site, duplicate index, unknown kind).
struct ArgumentError : std::invalid_argument {
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite values or a diverging iteration.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver hit its cap before reaching tolerance.
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A metric/transfer matrix is singular beyond what regularization can absorb.
struct ConditioningError : std::runtime_error {
  explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

/// A ModelSpec or RunConfig failed validation.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A dense construction exceeded its configured size cap.
struct SizeError : std::runtime_error {
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside a function's mathematical domain.
struct DomainError : std::domain_error {
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Mass extraction failed on the whole profile.
struct ExtractionError : std::runtime_error {
  explicit ExtractionError(const std::string& what) : std::runtime_error(what) {}
};

/// No plateau window found below the tolerance cap.
struct PlateauError : std::runtime_error {
  explicit PlateauError(const std::string& what) : std::runtime_error(what) {}
};

/// Least-squares fit did not converge or lacked data.
struct FitError : std::runtime_error {
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// An environment cache was used after the state it was built from changed.
struct InternalConsistencyError : std::logic_error {
  explicit InternalConsistencyError(const std::string& what) : std::logic_error(what) {}
};

/// Operation requires a gauge/boundary the input does not have.
struct UnsupportedGaugeError : std::runtime_error {
  explicit UnsupportedGaugeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kinkfield
