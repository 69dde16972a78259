#ifndef PULSEKIT_CORE_MODEL_HPP
#define PULSEKIT_CORE_MODEL_HPP

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "pulsekit/types.hpp"

namespace pulsekit {

struct SystemParams {
    Real mu = 0.1;
    Real alpha = 0.0;
    Real beta = 0.0;
    Real b = 0.0;
    Real D = 1.0;
    Real epsilon = 0.1;

    /// Throws Error(config) when mu, D or epsilon leave their admissible range.
    void validate() const;
};

/// Unit-mass Gaussian I(xi) = exp(-xi^2)/sqrt(pi).
struct ImpurityProfile {
    Real operator()(Real xi) const;
    /// (1/eps^2) I(x/eps^2)
    Real density(Real eps, Real x) const;
    /// Trapezoid mass of I on [-10, 10] with step 1/20.
    Real reference_mass() const;
};

struct Monomial {
    int p = 0;
    int q = 0;
    Real c = 0.0;
};

/// Sparse bivariate polynomial sum c * u1^p * u2^q.
class BivariatePoly {
public:
    BivariatePoly() = default;
    /// Throws Error(config) on negative exponents or duplicate (p, q).
    explicit BivariatePoly(std::vector<Monomial> terms);

    const std::vector<Monomial>& terms() const { return terms_; }
    Real coeff(int p, int q) const;
    int degree() const;
    bool empty() const { return terms_.empty(); }

    /// Mixed partial derivative d^(d1+d2) / du1^d1 du2^d2.
    template <class Scalar>
    Scalar derivative(int d1, int d2, Scalar u1, Scalar u2) const
    {
        Scalar sum(0);
        for (const auto& m : terms_) {
            if (m.p < d1 || m.q < d2)
                continue;
            Real f = m.c;
            for (int k = 0; k < d1; ++k)
                f *= m.p - k;
            for (int k = 0; k < d2; ++k)
                f *= m.q - k;
            sum += Scalar(f) * ipow(u1, m.p - d1) * ipow(u2, m.q - d2);
        }
        return sum;
    }

    template <class Scalar> Scalar operator()(Scalar u1, Scalar u2) const
    {
        return derivative(0, 0, u1, u2);
    }

    /// Terms with p + q <= 1.
    BivariatePoly affine_part() const;
    /// Terms with p + q >= 2.
    BivariatePoly nonlinear_part() const;

private:
    template <class Scalar> static Scalar ipow(Scalar x, int n)
    {
        Scalar r(1);
        for (int k = 0; k < n; ++k)
            r *= x;
        return r;
    }

    std::vector<Monomial> terms_;
};

Real eval_poly(const BivariatePoly& G, Real u1, Real u2);

struct ReactionSystem {
    SystemParams params;
    BivariatePoly G1;
    BivariatePoly G2;

    bool nonzero_at_origin() const;
    ReactionSystem with_mu(Real mu) const;
    ReactionSystem affine_part() const;

    /// Jacobian dG_i/dU_j at (u1, u2).
    Mat2 jacobian(Real u1, Real u2) const;
    Vec2 eval(Real u1, Real u2) const { return Vec2(G1(u1, u2), G2(u1, u2)); }
    Real coupling(int i) const { return i == 0 ? params.alpha : params.beta; }
};

enum class Branch { general, resonant };
enum class Coupling { forward, adjoint };

/// |D - 1| below this routes to the resonant (D = 1) formulas.
inline constexpr Real resonant_tol = 1e-9;
/// |D - 1| below this (and above resonant_tol) uses compensated forms.
inline constexpr Real near_resonant_tol = 1e-4;

Branch branch_for(Real D);

/// Principal square root; throws Error(domain) on the closed negative real axis.
Complex principal_sqrt(Complex z);

/// x^k e^{-rate x} times coef, for x >= 0.
struct ExpTerm {
    Complex coef;
    int power = 0;
    Complex rate;
};

/// Even two-component piecewise-exponential function. Outside I_f each
/// component is a combination of exp(-t|x|) and exp(-t|x|/sqrt(D)),
/// t = sqrt(lambda_shift); inside I_f it is the constant center value.
class PiecewiseExpSolution {
public:
    PiecewiseExpSolution() = default;
    /// From the center (I_f) values v1, v2.
    static PiecewiseExpSolution from_center(Complex lambda_shift, Complex v1,
                                            Complex v2, Real b, Real D,
                                            Coupling coupling);
    /// From the slow-interval amplitudes (C1/C2, C3/C4, C5/C6 patterns).
    static PiecewiseExpSolution from_amplitudes(Complex lambda_shift,
                                                Complex fast_amp,
                                                Complex slow_amp, Real b,
                                                Real D, Coupling coupling);

    Complex lambda_shift() const { return shift_; }
    Complex fast_amp() const { return fast_; }
    Complex slow_amp() const { return slow_; }
    Complex center(int i) const { return center_[i]; }
    Vec2c center() const { return Vec2c(center_[0], center_[1]); }
    Branch branch() const { return branch_; }
    Coupling coupling() const { return coupling_; }
    /// sqrt(mu + lambda)
    Complex fast_rate() const { return t_; }
    /// sqrt((mu + lambda) / D)
    Complex slow_rate() const { return s_; }
    Real b() const { return b_; }
    Real D() const { return D_; }

    /// Value of both components at |x| measured from the impurity,
    /// using the slow-interval formula (no I_f plateau).
    std::pair<Complex, Complex> outer(Real x) const;
    /// Slow-interval representation of component i for x >= 0.
    std::vector<ExpTerm> terms(int i) const;

private:
    void finish();

    Complex shift_{1.0}, t_{1.0}, s_{1.0};
    Complex fast_, slow_;
    std::array<Complex, 2> center_{};
    Complex K_{0.0};
    Real b_ = 0.0;
    Real D_ = 1.0;
    Branch branch_ = Branch::general;
    Coupling coupling_ = Coupling::forward;
};

std::pair<Complex, Complex> eval_piecewise(const PiecewiseExpSolution& sol,
                                           const ReactionSystem& sys, Real x);

/// Nodal values of (1/eps^2) I(x/eps^2) rescaled to unit trapezoid mass.
/// Throws Error(resolution) when fewer than 20 nodes fall in [-10eps^2, 10eps^2]
/// or the grid does not cover that core.
std::vector<Real> impurity_on_grid(const ImpurityProfile& profile, Real eps,
                                   const std::vector<Real>& grid);

/// leading * t^3 + A t^2 + B t + E
struct CubicForm {
    Real leading = 1.0;
    Real A = 0.0;
    Real B = 0.0;
    Real E = 0.0;

    template <class Scalar> Scalar operator()(Scalar t) const
    {
        return ((Scalar(leading) * t + Scalar(A)) * t + Scalar(B)) * t + Scalar(E);
    }
    template <class Scalar> Scalar derivative(Scalar t) const
    {
        return (Scalar(3.0 * leading) * t + Scalar(2.0 * A)) * t + Scalar(B);
    }
};

} // namespace pulsekit

#endif
