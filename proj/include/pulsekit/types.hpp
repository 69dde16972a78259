#ifndef PULSEKIT_TYPES_HPP
#define PULSEKIT_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pulsekit {

typedef double Real;
typedef std::complex<Real> Complex;

template <class Scalar> using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <class Scalar> using Mat2T = Eigen::Matrix<Scalar, 2, 2>;

typedef Vec2T<Real> Vec2;
typedef Vec2T<Complex> Vec2c;
typedef Mat2T<Real> Mat2;
typedef Mat2T<Complex> Mat2c;

enum class ErrorKind {
    domain,
    resolution,
    unsupported_family,
    search_failure,
    continuation,
    consistency,
    resonance,
    degeneracy,
    normalization,
    stepper,
    config,
};

const char* to_string(ErrorKind kind);

/// Solver-level failure. The CLI maps every Error to exit code 2
/// except `config`, which maps to 1.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace pulsekit

#endif
