#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace otadapt {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the offending line number when known.
struct ParseError : Error {
  ParseError(const std::string& file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_name(file), line_number(line) {}
  std::string file_name;
  int line_number;
};

/// Newton iteration for the inverse isoparametric map did not converge.
struct NoConvergence : Error {
  using Error::Error;
};

/// Query point is outside the (inflated) mesh domain.
struct NotFound : Error {
  using Error::Error;
};

/// Linear solver failed (singular or ill-conditioned system).
struct SolverFailure : Error {
  using Error::Error;
};

/// State has non-positive density where a positive one is required.
struct NonPositiveDensity : Error {
  NonPositiveDensity(int elem, const std::string& what)
      : Error(what), element(elem) {}
  int element;
};

/// Mesh density function failed the strict-positivity requirement.
struct NonPositiveDensityFunction : Error {
  using Error::Error;
};

/// Density evaluation failed during the Monge-Ampere iteration.
struct DensityEvaluationFailure : Error {
  using Error::Error;
};

/// Fixed-point iteration hit the iteration cap without converging.
struct MaxIterations : Error {
  MaxIterations(const std::string& what, std::vector<double> history)
      : Error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

/// Global trace system (or a local element solve) is singular.
struct SingularSystem : Error {
  using Error::Error;
};

/// Extracted adapted mesh has tangled (det J <= 0) elements.
struct InvalidAdaptedMesh : Error {
  InvalidAdaptedMesh(const std::string& what, std::vector<int> elems)
      : Error(what), tangled_elements(std::move(elems)) {}
  std::vector<int> tangled_elements;
};

/// Mesh fails a validity requirement (tangled element, bad connectivity).
struct InvalidMesh : Error {
  using Error::Error;
};

}  // namespace otadapt
