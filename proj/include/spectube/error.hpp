#pragma once

#include <stdexcept>
#include <string>

namespace spectube {

/// Failure class used by the CLI to pick an exit code.
enum class ErrorKind {
    Validation, ///< bad input: malformed files, wrong topology, bad config
    Numerical,  ///< a solver or geometric procedure could not produce a result
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string name, const std::string& what)
        : std::runtime_error(what), kind_(kind), name_(std::move(name)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Stable machine-readable error identifier, e.g. "ParseError".
    const std::string& name() const noexcept { return name_; }

private:
    ErrorKind kind_;
    std::string name_;
};

#define SPECTUBE_DECLARE_ERROR(Name, Kind)                                      \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, #Name, what) {} \
    };

// mesh_core
SPECTUBE_DECLARE_ERROR(ParseError, Validation)
SPECTUBE_DECLARE_ERROR(NonManifoldError, Validation)
SPECTUBE_DECLARE_ERROR(DegenerateFaceError, Validation)
SPECTUBE_DECLARE_ERROR(VertexNotOnLoopError, Validation)
SPECTUBE_DECLARE_ERROR(TopologyError, Validation)
// spectral
SPECTUBE_DECLARE_ERROR(EigenSolveFailure, Numerical)
SPECTUBE_DECLARE_ERROR(DisconnectedMeshError, Validation)
SPECTUBE_DECLARE_ERROR(InsufficientModesError, Validation)
SPECTUBE_DECLARE_ERROR(SingularSystemError, Numerical)
// levelset
SPECTUBE_DECLARE_ERROR(EmptyLevelSetError, Numerical)
SPECTUBE_DECLARE_ERROR(StagnationError, Numerical)
SPECTUBE_DECLARE_ERROR(EmptyCenterlineError, Validation)
// folds
SPECTUBE_DECLARE_ERROR(TooFewSamplesError, Validation)
SPECTUBE_DECLARE_ERROR(DegenerateGeometryError, Numerical)
SPECTUBE_DECLARE_ERROR(NoExtremaError, Numerical)
// registration
SPECTUBE_DECLARE_ERROR(OrientationMismatchError, Validation)
SPECTUBE_DECLARE_ERROR(FoldOverError, Numerical)
// flatten
SPECTUBE_DECLARE_ERROR(NoGapError, Numerical)
SPECTUBE_DECLARE_ERROR(DisconnectedCorridorError, Numerical)
SPECTUBE_DECLARE_ERROR(FlipError, Numerical)
// eval
SPECTUBE_DECLARE_ERROR(EmptyGroundTruthError, Validation)
SPECTUBE_DECLARE_ERROR(TooFewLandmarksError, Validation)
// synth
SPECTUBE_DECLARE_ERROR(SpecValidationError, Validation)
SPECTUBE_DECLARE_ERROR(SelfIntersectionError, Validation)
// cli
SPECTUBE_DECLARE_ERROR(ConfigError, Validation)

#undef SPECTUBE_DECLARE_ERROR

} // namespace spectube
