// Independent oracles shared by the unit tests and the acceptance binary.
#ifndef PULSEKIT_TESTS_SUPPORT_HPP
#define PULSEKIT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pulsekit/hopf_locator.hpp"

namespace pulsekit::testing {

typedef long double Ld;

/// Two-component example with a cubic correction nu U1^3 in G1.
inline ReactionSystem cubic_example(Real mu, Real nu, Real eps = 0.1)
{
    ReactionSystem s;
    s.params = SystemParams{mu, 2.0, 2.0, std::sqrt(3.0) / 3.0, 4.0, eps};
    std::vector<Monomial> g1{{0, 1, 1.0}, {0, 0, 1.0}};
    if (nu != 0.0)
        g1.push_back({3, 0, nu});
    s.G1 = BivariatePoly(g1);
    s.G2 = BivariatePoly({{1, 0, 1.0}, {0, 0, 2.0}});
    return s;
}

/// Hopf point of the example from its radical expressions.
inline Ld radical_mu_hat()
{
    const Ld s2 = std::sqrt(2.0L);
    return (4.0L - std::cbrt(3.0L + 2.0L * s2) - std::cbrt(3.0L - 2.0L * s2)) / 12.0L;
}

inline Ld radical_omega()
{
    const Ld s2 = std::sqrt(2.0L);
    return std::sqrt(3.0L) / 12.0L * (std::cbrt(3.0L + 2.0L * s2) - std::cbrt(3.0L - 2.0L * s2));
}

/// Leading-order pulse of the example at nu = 0 (closed form).
inline std::pair<Real, Real> example_pulse_closed_form(Real mu)
{
    const Real s3 = std::sqrt(3.0), s3m = std::sqrt(3.0 * mu), sm = std::sqrt(mu);
    const Real C1 = (-6.0 * s3 * mu - 6.0 * s3m) / (-6.0 * s3m * mu + 3.0 * s3m - 2.0);
    const Real C2 = (6.0 * s3m * mu + 3.0 * s3 * mu - 4.0 * sm - 2.0) / (6.0 * s3 * mu * mu - 3.0 * s3 * mu + 2.0 * sm);
    return {C1, C2};
}

/// Existence residual written out term by term from the matching equations.
inline std::array<Ld, 2> existence_residual_oracle(const ReactionSystem& s, Ld C1, Ld C2)
{
    const auto& p = s.params;
    const Ld mu = p.mu, D = p.D;
    const Ld W = C2 + Ld(p.b) * C1 / ((D - 1.0L) * mu);
    const auto G = [&](const BivariatePoly& g) {
        Ld sum = 0.0L;
        for (const auto& m : g.terms())
            sum += Ld(m.c) * std::pow(C1, Ld(m.p)) * std::pow(W, Ld(m.q));
        return sum;
    };
    return {2.0L * std::sqrt(mu) * C1 - Ld(p.alpha) * G(s.G1),
            2.0L * (std::sqrt(mu / D) * C2 + Ld(p.b) * C1 / ((D - 1.0L) * std::sqrt(mu))) - Ld(p.beta) / D * G(s.G2)};
}

/// Polynomial value in long double, used for finite-difference references.
inline Ld eval_ld(const BivariatePoly& g, Ld u1, Ld u2)
{
    Ld sum = 0.0L;
    for (const auto& m : g.terms())
        sum += Ld(m.c) * std::pow(u1, Ld(m.p)) * std::pow(u2, Ld(m.q));
    return sum;
}

/// Roots of a cubic from the eigenvalues of its companion matrix, each
/// polished by Newton steps in long double.
inline std::array<Complex, 3> companion_roots(const CubicForm& c)
{
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    M(0, 0) = -c.A / c.leading;
    M(0, 1) = -c.B / c.leading;
    M(0, 2) = -c.E / c.leading;
    M(1, 0) = 1.0;
    M(2, 1) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(M, false);
    std::array<Complex, 3> r;
    for (int k = 0; k < 3; ++k) {
        std::complex<Ld> z(es.eigenvalues()[k].real(), es.eigenvalues()[k].imag());
        for (int it = 0; it < 4; ++it) {
            const std::complex<Ld> f = ((Ld(c.leading) * z + Ld(c.A)) * z + Ld(c.B)) * z + Ld(c.E);
            const std::complex<Ld> df = (3.0L * Ld(c.leading) * z + 2.0L * Ld(c.A)) * z + Ld(c.B);
            if (std::abs(df) == 0.0L)
                break;
            z -= f / df;
        }
        r[k] = Complex(Real(z.real()), Real(z.imag()));
    }
    return r;
}

/// Largest distance from a root in a to its nearest neighbour in b.
template <class A, class B> Real max_root_gap(const A& a, const B& b)
{
    Real worst = 0.0;
    for (const auto& x : a) {
        Real best = INFINITY;
        for (const auto& y : b)
            best = std::min(best, std::abs(x - y));
        worst = std::max(worst, best);
    }
    return worst;
}

inline Real uniform(std::mt19937_64& rng, Real lo, Real hi)
{
    return std::uniform_real_distribution<Real>(lo, hi)(rng);
}

inline Real signed_uniform(std::mt19937_64& rng, Real lo, Real hi)
{
    const Real v = uniform(rng, lo, hi);
    return std::bernoulli_distribution(0.5)(rng) ? v : -v;
}

inline SystemParams random_params(std::mt19937_64& rng)
{
    SystemParams p;
    p.mu = uniform(rng, 0.05, 1.0);
    p.alpha = signed_uniform(rng, 0.5, 2.0);
    p.beta = signed_uniform(rng, 0.5, 2.0);
    p.b = signed_uniform(rng, 0.1, 1.0);
    p.D = std::exp(uniform(rng, std::log(0.25), std::log(4.0)));
    if (std::abs(p.D - 1.0) < 0.05)
        p.D = 1.5;
    p.epsilon = 0.1;
    return p;
}

inline ReactionSystem random_linear(std::mt19937_64& rng)
{
    ReactionSystem s;
    s.params = random_params(rng);
    s.G1 = BivariatePoly({{0, 0, signed_uniform(rng, 0.2, 2.0)},
                          {1, 0, signed_uniform(rng, 0.1, 2.0)},
                          {0, 1, signed_uniform(rng, 0.1, 2.0)}});
    s.G2 = BivariatePoly({{0, 0, signed_uniform(rng, 0.2, 2.0)},
                          {1, 0, signed_uniform(rng, 0.1, 2.0)},
                          {0, 1, signed_uniform(rng, 0.1, 2.0)}});
    return s;
}

/// Random member of a family together with one non-degenerate pulse.
struct FamilyInstance {
    ReactionSystem sys;
    PinnedPulse pulse;
};

inline ReactionSystem random_family_system(Family f, std::mt19937_64& rng)
{
    ReactionSystem s;
    s.params = random_params(rng);
    const auto c = [&] { return signed_uniform(rng, 0.2, 2.0); };
    switch (f) {
    case Family::linear:
        return random_linear(rng);
    case Family::g15_g21:
        s.G1 = BivariatePoly({{0, 0, c()}, {0, 2, c()}});
        s.G2 = BivariatePoly({{0, 0, c()}});
        break;
    case Family::g15_g22:
        s.G1 = BivariatePoly({{0, 0, c()}, {0, 2, c()}});
        s.G2 = BivariatePoly({{1, 0, c()}});
        break;
    case Family::g15_g23:
        s.G1 = BivariatePoly({{0, 0, c()}, {0, 2, c()}});
        s.G2 = BivariatePoly({{0, 1, c()}});
        break;
    case Family::g13_g24:
        s.G1 = BivariatePoly({{0, 0, c()}, {0, 1, c()}});
        s.G2 = BivariatePoly({{2, 0, c()}});
        break;
    case Family::g13_g25:
        s.G1 = BivariatePoly({{0, 0, c()}, {0, 1, c()}});
        s.G2 = BivariatePoly({{0, 2, c()}});
        break;
    case Family::g13_g26:
        s.G1 = BivariatePoly({{0, 0, c()}, {0, 1, c()}});
        s.G2 = BivariatePoly({{1, 1, c()}});
        break;
    case Family::g13_g22_cubic:
        s.G1 = BivariatePoly({{0, 0, c()}, {0, 1, c()}, {3, 0, signed_uniform(rng, 1e-3, 0.1)}});
        s.G2 = BivariatePoly({{0, 0, c()}, {1, 0, c()}});
        break;
    }
    return s;
}

inline FamilyInstance random_family(Family f, std::mt19937_64& rng)
{
    for (;;) {
        auto s = random_family_system(f, rng);
        PulseSolveOptions opt;
        opt.grid_points = 11;
        for (const auto& p : solve_pulse(s, {}, opt))
            if (!p.degenerate && p.residual < 1e-10)
                return {s, p};
    }
}

/// Hopf point of a random member of a family with a nonzero frequency.
inline std::optional<std::pair<ReactionSystem, HopfPoint>> random_hopf(Family f, std::mt19937_64& rng,
                                                                        int attempts = 2000)
{
    for (int k = 0; k < attempts; ++k) {
        const auto inst = random_family(f, rng);
        try {
            const auto h = locate_hopf_closed_form(reduce_to_cubic(inst.sys, inst.pulse, f), inst.sys);
            if (h && h->omega_H > 1e-3)
                return std::make_pair(inst.sys, *h);
        } catch (const Error&) {
        }
    }
    return std::nullopt;
}

/// |c(t)| over the sum of the term magnitudes.
inline Real rel_residual(const CubicForm& c, Complex t)
{
    const Real scale = std::abs(c.leading) * std::pow(std::abs(t), 3) + std::abs(c.A) * std::norm(t) +
                       std::abs(c.B) * std::abs(t) + std::abs(c.E);
    return std::abs(c(t)) / std::max(scale, 1e-300);
}

inline constexpr std::array<Family, 8> all_families{Family::linear,  Family::g15_g21, Family::g15_g22,
                                                    Family::g15_g23, Family::g13_g24, Family::g13_g25,
                                                    Family::g13_g26, Family::g13_g22_cubic};

} // namespace pulsekit::testing

#endif
