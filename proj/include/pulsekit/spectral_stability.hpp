#ifndef PULSEKIT_SPECTRAL_STABILITY_HPP
#define PULSEKIT_SPECTRAL_STABILITY_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pulsekit/core_model.hpp"
#include "pulsekit/pulse_existence.hpp"

namespace pulsekit {

/// Model families with a closed-form cubic. Names follow the nonzero
/// impurity coefficients: G1 = G11 + G15 U2^2 with G2 = G21, G22 U1 or
/// G23 U2; G1 = G11 + G13 U2 with G2 = G24 U1^2, G25 U2^2 or G26 U1 U2;
/// g13_g22_cubic is G1 = G11 + G13 U2 + nu U1^3 with G2 = G21 + G22 U1.
enum class Family {
    linear,
    g15_g21,
    g15_g22,
    g15_g23,
    g13_g24,
    g13_g25,
    g13_g26,
    g13_g22_cubic,
};

const char* to_string(Family f);
std::optional<Family> family_from_string(const std::string& s);
std::optional<Family> detect_family(const ReactionSystem& sys);
/// True when every monomial of sys belongs to the family pattern; some
/// pattern coefficients may vanish.
bool fits_family(const ReactionSystem& sys, Family family);

/// Impurity Jacobian dG_i/dU_j at the pulse core together with the
/// parameters it was taken at.
struct CoreLinearization {
    SystemParams params;
    Mat2 J = Mat2::Zero();
};

CoreLinearization linearize(const ReactionSystem& sys, const PinnedPulse& pulse);

/// Jump conditions in the core values (P1(0), P2(0)) with the second row
/// multiplied by D. Entries are smooth in D across D = 1.
template <class Scalar>
Mat2T<Scalar> forward_matrix(const CoreLinearization& lin, Scalar t)
{
    const auto& p = lin.params;
    const Real sD = std::sqrt(p.D);
    Mat2T<Scalar> M;
    M(0, 0) = Scalar(2.0) * t - Scalar(p.alpha * lin.J(0, 0));
    M(0, 1) = Scalar(-p.alpha * lin.J(0, 1));
    M(1, 0) = Scalar(2.0 * p.b * sD / (sD + 1.0)) / t - Scalar(p.beta * lin.J(1, 0));
    M(1, 1) = Scalar(2.0 * sD) * t - Scalar(p.beta * lin.J(1, 1));
    return M;
}

/// The adjoint jump conditions are the transpose of the forward ones.
template <class Scalar>
Mat2T<Scalar> adjoint_matrix(const CoreLinearization& lin, Scalar t)
{
    return forward_matrix(lin, t).transpose();
}

/// t * det(forward_matrix(t)): a cubic in t, analytic in lambda off the cut.
Complex scaled_determinant(const CoreLinearization& lin, Complex lambda);

struct EigenSolution {
    Complex lambda;
    Complex C3;
    Complex C4;
    PiecewiseExpSolution eigfun;
    Real det_abs = 0.0;
};

struct CubicReduction {
    Family family = Family::linear;
    CubicForm cubic;
    std::array<Complex, 3> t_roots{};
    std::vector<Complex> lambda_roots;
    Real mu = 0.0;
    PinnedPulse pulse;
};

struct StabilityVerdict {
    bool stable = true;
    std::optional<Complex> leading_eigenvalue;
    Real essential_spectrum_edge = 0.0;
    std::vector<EigenSolution> eigenvalues;
};

struct SearchRect {
    Real re_min = 0.0;
    Real re_max = 0.0;
    Real im_min = 0.0;
    Real im_max = 0.0;
};

/// Re in [-mu + 1e-6, mu + 10], |Im| <= 10 (1 + mu).
SearchRect default_search_rect(Real mu);

/// Determinant of the (C3, C4) system as printed; the D = 1 variant uses the
/// secular profile, and 1e-9 <= |D - 1| < 1e-4 uses the core-value form.
Complex eigen_determinant(const ReactionSystem& sys, const PinnedPulse& pulse, Complex lambda);
Complex eigen_determinant(const CoreLinearization& lin, Complex lambda);

std::array<Complex, 3> shengjin_roots(const CubicForm& c);

/// Closed-form cubic for the recognized families; throws
/// Error(unsupported_family) otherwise.
CubicReduction reduce_to_cubic(const ReactionSystem& sys, const PinnedPulse& pulse);
CubicReduction reduce_to_cubic(const ReactionSystem& sys, const PinnedPulse& pulse, Family family);

/// Newton polish of a determinant zero starting from lambda0.
std::optional<Complex> polish_eigenvalue(const CoreLinearization& lin, Complex lambda0,
                                         Real tol = 1e-13, int max_iter = 60);

/// Eigenfunction from the null vector of the jump conditions at lambda.
EigenSolution eigen_solution_at(const CoreLinearization& lin, Complex lambda);

struct EigenSearchOptions {
    int edge_samples = 32;
    int max_depth = 40;
    Real newton_tol = 1e-13;
};

/// Winding number of scaled_determinant around the rectangle.
int count_zeros(const CoreLinearization& lin, const SearchRect& rect);

std::vector<EigenSolution> find_eigenvalues(const ReactionSystem& sys, const PinnedPulse& pulse,
                                            const SearchRect& rect,
                                            const EigenSearchOptions& opt = {});
std::vector<EigenSolution> find_eigenvalues(const CoreLinearization& lin, const SearchRect& rect,
                                            const EigenSearchOptions& opt = {});

StabilityVerdict classify_stability(const ReactionSystem& sys, const PinnedPulse& pulse);

} // namespace pulsekit

#endif
