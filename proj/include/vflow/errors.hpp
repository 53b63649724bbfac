#pragma once

#include <stdexcept>
#include <string>

namespace vflow {

/// Base of every error raised by the library. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed files, violated preconditions.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Degenerate geometry (zero-length edge, zero-area face, fold-back tangent).
/// `index` names the offending vertex, edge or face.
class GeometryError : public Error {
public:
    GeometryError(const std::string& what, long index)
        : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
    long index() const noexcept { return index_; }

private:
    long index_;
};

/// Exponent of the weight exp(<x - tV, V>) left the representable range.
class OverflowError : public Error {
public:
    OverflowError(const std::string& what, long vertex)
        : Error(what + " (vertex " + std::to_string(vertex) + ")"), vertex_(vertex) {}
    long vertex() const noexcept { return vertex_; }

private:
    long vertex_;
};

/// Requested time window or sample does not intersect the recorded data.
class RangeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced during integration.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

} // namespace vflow
