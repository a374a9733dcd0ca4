#pragma once

#include <stdexcept>
#include <string>

namespace taufn {

// Base class for every failure the library reports deliberately.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operands have incompatible block sizes.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// A loop with negative Fourier support was evaluated at z = 0.
class ZeroArgument : public Error {
public:
    using Error::Error;
};

// A sampled matrix was numerically singular at a quadrature node.
class SingularAtNode : public Error {
public:
    SingularAtNode(const std::string& what, int node_index)
        : Error(what), node(node_index) {}
    int node;
};

// Fourier tail of a transformed sample set never dropped below tolerance.
class TailNotConverged : public Error {
public:
    using Error::Error;
};

// det phi jumped by more than 0.9*pi between adjacent nodes; the grid is
// too coarse for reliable phase unwrapping.
class PhaseJumpTooLarge : public Error {
public:
    using Error::Error;
};

// The symbol determinant winds around the origin; logarithms, geometric
// means and factorizations are undefined in this regime.
class NonzeroWinding : public Error {
public:
    NonzeroWinding(const std::string& what, int w)
        : Error(what), winding(w) {}
    int winding;
};

// An iterative refinement (truncation doubling, residual-driven solve)
// hit its cap without meeting the requested tolerance.
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, int parameter_reached)
        : Error(what), reached(parameter_reached) {}
    int reached;
};

// The least-squares factorization system was ill-conditioned beyond use.
class SingularSystem : public Error {
public:
    SingularSystem(const std::string& what, double condition)
        : Error(what), cond(condition) {}
    double cond;
};

// A scalar-only routine received a matrix symbol.
class NotScalar : public Error {
public:
    using Error::Error;
};

// Requested power index is divisible by n and so lies outside the
// exponent set of the principal gradation.
class NotAnExponent : public Error {
public:
    using Error::Error;
};

// Series form of an adjoint-orbit coefficient kept producing
// non-negligible terms at the requested order.
class SeriesNotConverged : public Error {
public:
    using Error::Error;
};

// Truncation window for a finite-section identity check has no rows.
class WindowEmpty : public Error {
public:
    using Error::Error;
};

// Nodewise inversion inside a factorization pipeline failed.
class InverseFailed : public Error {
public:
    using Error::Error;
};

// The normalized determinant sequence moves away from its limit.
class DivergenceDetected : public Error {
public:
    using Error::Error;
};

// A scenario file violates the configuration schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

} // namespace taufn
