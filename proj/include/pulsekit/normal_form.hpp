#ifndef PULSEKIT_NORMAL_FORM_HPP
#define PULSEKIT_NORMAL_FORM_HPP

#include <optional>
#include <string>

#include "pulsekit/hopf_locator.hpp"

namespace pulsekit {

/// Kernel element of L* + i omega_H.
struct AdjointEigenSolution {
    Complex C5;
    Complex C6;
    PiecewiseExpSolution eigfun;
    Complex lambda;
    Real residual = 0.0;
};

enum class PsiTag { Psi001, Psi200, Psi110 };
const char* to_string(PsiTag t);

/// Solution of (shift - L) Psi = delta(x) * coupling * forcing.
struct ResolventSolution {
    PsiTag tag = PsiTag::Psi001;
    Complex shift;
    Complex fast_amp;
    Complex slow_amp;
    /// Quadratic source at the core before multiplication by (alpha, beta).
    Vec2c forcing = Vec2c::Zero();
    PiecewiseExpSolution sol;
    Real residual = 0.0;
    bool zero = true;
};

enum class Criticality { supercritical, subcritical, degenerate };
const char* to_string(Criticality c);

/// consistent: P, P*, Psi from the full Jacobian at the Hopf pulse.
/// perturbative: spectral data of the affine part, cubic term only. This is
/// the leading order in a small cubic coefficient.
enum class NormalFormMode { consistent, perturbative };
const char* to_string(NormalFormMode m);

struct NormalFormOptions {
    NormalFormMode mode = NormalFormMode::consistent;
    /// R11 acting pointwise; -identity for every bifurcation in mu.
    Mat2c R11 = -Mat2c::Identity();
    /// L1 integrates over (-inf, -cutoff]; 0 gives the eps-free value.
    Real l1_cutoff = 0.0;
};

struct NormalFormData {
    Complex a;
    Complex b;
    Real a_r = 0.0, a_i = 0.0, b_r = 0.0, b_i = 0.0;
    Criticality classification = Criticality::degenerate;
    Complex I2;
    Complex L1;
    /// Plateau part of <P, P*> over I_f, for eps-size checks.
    Complex L2;
    NormalFormMode mode = NormalFormMode::consistent;
};

struct NormalFormReport {
    HopfPoint hopf;
    AdjointEigenSolution adjoint;
    ResolventSolution psi001, psi200, psi110;
    NormalFormData data;
    /// Largest relative Fredholm defect over the a, Psi200 and Psi110 identities.
    Real fredholm = 0.0;
};

/// Throws Error(consistency) when -i omega_H is not an adjoint eigenvalue.
AdjointEigenSolution solve_adjoint(const ReactionSystem& sys, const HopfPoint& hopf);

/// Throws Error(resonance) when the matching matrix is near singular.
ResolventSolution solve_resolvent_quadratic(const ReactionSystem& sys, const HopfPoint& hopf, PsiTag which);

/// <u, v> = integral of u conj(v) over the line, summed over components,
/// with the I_f plateau shrunk to a point. Closed form over |x| >= cutoff.
Complex inner_product(const PiecewiseExpSolution& u, const PiecewiseExpSolution& v, Real cutoff = 0.0);
/// Component block <u_i, v_j> over x >= cutoff.
Complex half_line_product(const PiecewiseExpSolution& u, int i, const PiecewiseExpSolution& v, int j,
                          Real cutoff = 0.0);
/// Same integral by adaptive Simpson quadrature on [lo, hi].
Complex half_line_quadrature(const PiecewiseExpSolution& u, const PiecewiseExpSolution& v, Real lo, Real hi,
                             Real rel_tol = 1e-12);

Complex coefficient_a(const ReactionSystem& sys, const HopfPoint& hopf, const AdjointEigenSolution& adjoint,
                      const Mat2c& R11 = -Mat2c::Identity());

NormalFormData coefficient_b(const ReactionSystem& sys, const HopfPoint& hopf, const AdjointEigenSolution& adjoint,
                             const ResolventSolution& psi200, const ResolventSolution& psi110);

Criticality classify(Complex b);

/// Full pipeline at a Hopf point. In perturbative mode hopf must belong to
/// sys.affine_part(); the cubic term is taken from sys.
NormalFormReport compute_normal_form(const ReactionSystem& sys, const HopfPoint& hopf,
                                     const NormalFormOptions& opt = {});

struct BreathingPrediction {
    Real amplitude = 0.0;
    Real frequency = 0.0;
    bool stable = false;
    PiecewiseExpSolution pulse_profile;
    PiecewiseExpSolution mode;

    /// Gamma_p + amplitude e^{i omega t} P + c.c. at (x, t).
    std::pair<Real, Real> at(Real x, Real t) const;
};

/// Orbit predicted at mu; nullopt on the side where none exists.
std::optional<BreathingPrediction> predict_breather(const NormalFormData& nf, const HopfPoint& hopf, Real mu);

} // namespace pulsekit

#endif
