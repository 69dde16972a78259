#ifndef PULSEKIT_PDE_SIMULATOR_HPP
#define PULSEKIT_PDE_SIMULATOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pulsekit/spectral_stability.hpp"

namespace pulsekit {

enum class Boundary { dirichlet, neumann };
enum class InitialState { pulse, pulse_kick, pulse_noise, zero };
/// imex: Crank-Nicolson on the affine part, Adams-Bashforth 2 on the
/// nonlinear monomials. implicit: Crank-Nicolson with Newton on everything.
enum class Stepper { imex, implicit };
enum class Mesh { uniform, graded };
enum class Outcome { decay, sustained, growing, blow_up, indeterminate };

const char* to_string(Boundary b);
const char* to_string(InitialState s);
const char* to_string(Stepper s);
const char* to_string(Mesh m);
const char* to_string(Outcome o);

struct SimConfig {
    Real domain_half_width = 30.0;
    /// Core spacing; 0 selects eps^2 / 5.
    Real dx = 0.0;
    Real dt = 0.01;
    Real t_end = 600.0;
    Boundary boundary = Boundary::neumann;
    InitialState initial = InitialState::pulse_kick;
    /// Kick size relative to the sup norm of the pulse.
    Real kick = 1e-2;
    Stepper stepper = Stepper::imex;
    Mesh mesh = Mesh::uniform;
    /// Graded mesh: uniform dx on |x| <= graded_core, then spacing grows by
    /// graded_ratio per cell up to graded_dx_max.
    Real graded_core = 0.5;
    Real graded_ratio = 1.03;
    Real graded_dx_max = 0.05;
    Real sample_interval = 0.1;
    /// Trailing window of the amplitude envelope.
    Real envelope_window = 50.0;
    Real dt_min = 1e-6;
    /// Evolve the perturbation under the Jacobian frozen at the pulse.
    bool linearized = false;
    std::optional<std::pair<Real, Real>> pulse_seed;
    std::uint64_t noise_seed = 1;

    /// Hard violations throw Error(config); soft ones come back as warnings.
    std::vector<std::string> validate(const SystemParams& p) const;
    Real core_dx(const SystemParams& p) const { return dx > 0.0 ? dx : p.epsilon * p.epsilon / 5.0; }
};

std::vector<Real> make_uniform_grid(Real half_width, Real dx);
/// Symmetric about 0 with a uniform core.
std::vector<Real> make_graded_grid(Real half_width, Real dx, Real core, Real ratio, Real dx_max);
std::vector<Real> make_grid(const SimConfig& cfg, const SystemParams& p);

struct CenterSample {
    Real t = 0.0;
    Real u1 = 0.0;
    Real u2 = 0.0;
    Real envelope = 0.0;
};

struct SimDiagnostics {
    std::vector<CenterSample> series;
    std::optional<Real> estimated_period;
    Outcome outcome = Outcome::indeterminate;
    Real max_norm = 0.0;
    Real final_time = 0.0;
    Real dt = 0.0;
    /// Sup norm of the initial perturbation.
    Real kick_norm = 0.0;
    /// Discrete steady state at x = 0 (zero in linearized mode).
    Real base_u1 = 0.0;
    Real base_u2 = 0.0;
    /// Envelope drift over the last quarter of the run.
    Real drift = 0.0;
    std::vector<Real> x, u1, u2;
    std::vector<std::string> warnings;
};

SimDiagnostics run_simulation(const ReactionSystem& sys, const SimConfig& cfg);

/// Mean spacing of same-sign extrema of u1 - mean after the first 20%;
/// nullopt with fewer than 6 extrema.
std::optional<Real> measure_period(const std::vector<CenterSample>& series);

/// Least-squares slope of log envelope over the second half of the run.
std::optional<Real> estimate_growth_rate(const SimDiagnostics& d);

/// Residual of the discrete steady equations at the analytic pulse: the larger
/// of the pointwise residual on interior nodes with |x| >= eps and the flux
/// imbalance across I_f.
Real stationarity_residual(const ReactionSystem& sys, const PinnedPulse& pulse, const SimConfig& cfg);

std::string series_csv(const SimDiagnostics& d);
std::string snapshot_csv(const SimDiagnostics& d);

} // namespace pulsekit

#endif
