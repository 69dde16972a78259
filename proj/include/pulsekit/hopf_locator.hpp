#ifndef PULSEKIT_HOPF_LOCATOR_HPP
#define PULSEKIT_HOPF_LOCATOR_HPP

#include <optional>
#include <string>
#include <vector>

#include "pulsekit/spectral_stability.hpp"

namespace pulsekit {

struct AssumptionEntry {
    std::string name;
    bool satisfied = false;
    /// Positive when the inequality holds with margin. For the
    /// root-existence conditions: the equation residual at mu.
    Real slack = 0.0;
};

struct AssumptionAudit {
    Family family = Family::linear;
    Real mu = 0.0;
    std::vector<AssumptionEntry> entries;

    bool all_satisfied() const;
    const AssumptionEntry* find(const std::string& name) const;
};

struct HopfPoint {
    Real mu_hat = 0.0;
    Real omega_H = 0.0;
    Real n_r = 0.0;
    Real n_i = 0.0;
    EigenSolution eigen;
    Real transversality = 0.0;
    PinnedPulse pulse;
    std::optional<Family> family;
};

/// Assumption set stated for the family, evaluated literally at pulse.mu.
/// Throws Error(unsupported_family) when sys does not match family.
AssumptionAudit audit_assumptions(const ReactionSystem& sys, Family family, const PinnedPulse& pulse);
/// Convenience overload that requires a unique non-degenerate pulse at mu.
AssumptionAudit audit_assumptions(const ReactionSystem& sys, Family family, Real mu);

/// Hopf point from the conjugate pair of the family cubic. Families whose
/// coefficients depend on the pulse are re-solved self-consistently in mu,
/// continuing the pulse stored in red.
std::optional<HopfPoint> locate_hopf_closed_form(const CubicReduction& red, const ReactionSystem& sys);

struct ScanOptions {
    Real bisect_tol = 1e-12;
    Real transversality_h = 1e-6;
    Real min_imag = 1e-8;
};

/// Sign changes of the leading complex pair over a uniform mu grid, bisected.
/// seed selects the pulse branch at mu_min when several exist.
std::vector<HopfPoint> locate_hopf_scan(const ReactionSystem& sys, Real mu_min, Real mu_max, int steps,
                                        std::optional<std::pair<Real, Real>> seed = std::nullopt,
                                        const ScanOptions& opt = {});

} // namespace pulsekit

#endif
