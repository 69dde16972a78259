#ifndef PULSEKIT_PULSE_EXISTENCE_HPP
#define PULSEKIT_PULSE_EXISTENCE_HPP

#include <optional>
#include <string>
#include <vector>

#include "pulsekit/core_model.hpp"

namespace pulsekit {

struct PinnedPulse {
    Real C1 = 0.0;
    Real C2 = 0.0;
    Real mu = 0.0;
    PiecewiseExpSolution profile;
    Real residual = 0.0;
    bool degenerate = false;

    /// Impurity-core values (Gamma_1, Gamma_2) at x = 0.
    Real center1() const { return profile.center(0).real(); }
    Real center2() const { return profile.center(1).real(); }
};

/// LHS - RHS of the two existence equations, with the D = 1 variant
/// selected automatically.
Vec2 matching_residual(const ReactionSystem& sys, Real C1, Real C2);

/// Same equations written in the core values (v1, v2) = (Gamma_1(0), Gamma_2(0)).
/// Free of 1/(D-1) factors, so it is used by the solver for every D.
Vec2 center_residual(const ReactionSystem& sys, Real v1, Real v2);
Mat2 center_residual_jacobian(const ReactionSystem& sys, Real v1, Real v2);

/// Core value of the second component for given amplitudes.
Real core_value2(const SystemParams& p, Real C1, Real C2);
/// Inverse of core_value2.
Real slow_amplitude2(const SystemParams& p, Real v1, Real v2);

struct PulseSolveOptions {
    int max_iter = 40;
    Real tol = 1e-12;
    int grid_points = 21;
    Real dedup_distance = 1e-8;
    Real degenerate_sv = 1e-8;
    bool grid_scan = true;
};

/// Damped Newton from every seed plus the default grid scan; seeds are (C1, C2).
std::vector<PinnedPulse> solve_pulse(const ReactionSystem& sys,
                                     const std::vector<std::pair<Real, Real>>& seeds = {},
                                     const PulseSolveOptions& opt = {});

/// Single damped Newton solve from (C1, C2); empty when it does not converge.
std::optional<PinnedPulse> refine_pulse(const ReactionSystem& sys, Real C1, Real C2,
                                        const PulseSolveOptions& opt = {});

/// Root nearest to (C1, C2) among the roots of solve_pulse; throws
/// Error(continuation) when no root exists.
PinnedPulse select_pulse(const ReactionSystem& sys, Real C1, Real C2);

/// Unique non-degenerate root; throws Error(consistency) listing the
/// candidates when there are several and Error(continuation) when none.
PinnedPulse unique_pulse(const ReactionSystem& sys);

struct ProfileTable {
    std::vector<Real> x, u1, u2;
};

ProfileTable pulse_profile_csv(const PinnedPulse& p, const ReactionSystem& sys,
                               const std::vector<Real>& grid);
std::string to_csv(const ProfileTable& table);

} // namespace pulsekit

#endif
