#pragma once

#include <stdexcept>
#include <string>

namespace ltsp {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Mismatched or invalid matrix dimensions.
class DimensionError : public Error {
   public:
    using Error::Error;
};

// Invalid argument or configuration value; the message names the violated
// constraint (e.g. "m + p + q <= T").
class ParameterError : public Error {
   public:
    using Error::Error;
};

// Iterative kernel failed to converge.
class NumericError : public Error {
   public:
    using Error::Error;
};

// An eigenvalue sits within tolerance of the unit circle, so the
// unstable/stable split is ill posed.
class IllPosedSplitError : public Error {
   public:
    using Error::Error;
};

// Least-squares regressor lost row rank; carries the offending ratio
// sigma_min/sigma_max.
class RankDeficiencyError : public Error {
   public:
    RankDeficiencyError(const std::string& msg, double ratio) : Error(msg), sv_ratio(ratio) {}
    double sv_ratio;
};

// Riccati solve diverged or the pair is not stabilizable; also raised when no
// sweep point yields a stabilizing controller.
class SynthesisInfeasibleError : public Error {
   public:
    using Error::Error;
};

// Simulated state norm exceeded the overflow guard; carries the step index.
class BlowUpError : public Error {
   public:
    BlowUpError(const std::string& msg, int step_index) : Error(msg), step(step_index) {}
    int step;
};

// Random system generation could not satisfy the conditioning cap.
class GenerationError : public Error {
   public:
    using Error::Error;
};

// All Hankel singular values below the degeneracy floor.
class DegenerateHankelError : public Error {
   public:
    using Error::Error;
};

// The m/2-power shift estimate is numerically singular.
class ExtractionSingularityError : public Error {
   public:
    using Error::Error;
};

// zI - A is near singular at the requested evaluation point.
class PoleProximityError : public Error {
   public:
    using Error::Error;
};

// Algebraic loop I - D_K D is not invertible.
class WellPosednessError : public Error {
   public:
    using Error::Error;
};

// The system handed to an H-infinity computation is not stable, so the norm
// is infinite.
class UnstablePlantError : public Error {
   public:
    using Error::Error;
};

}  // namespace ltsp
