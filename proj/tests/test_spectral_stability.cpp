#include <doctest.h>

#include <algorithm>
#include <random>

#include "pulsekit/spectral_stability.hpp"
#include "support.hpp"

using namespace pulsekit;
using namespace pulsekit::testing;

namespace {

/// Positive root of 8 n^3 - n - 1/(3 sqrt 3) = 0 by Newton in long double:
/// the real part of the complex pair of t^3 - t/2 + 1/(3 sqrt 3).
Ld vieta_nr()
{
    const Ld c = 1.0L / (3.0L * std::sqrt(3.0L));
    Ld n = 0.5L;
    for (int i = 0; i < 60; ++i)
        n -= (8.0L * n * n * n - n - c) / (24.0L * n * n - 1.0L);
    return n;
}


} // namespace

TEST_SUITE("spectral_stability")
{
    TEST_CASE("roots of unity")
    {
        const auto r = shengjin_roots(CubicForm{1.0, 0.0, 0.0, -1.0});
        const std::array<Complex, 3> want{Complex(1.0, 0.0), Complex(-0.5, std::sqrt(3.0) / 2.0),
                                          Complex(-0.5, -std::sqrt(3.0) / 2.0)};
        CHECK(max_root_gap(r, want) < 1e-15);
        CHECK(max_root_gap(want, r) < 1e-15);
    }

    TEST_CASE("example cubic has the Vieta pair")
    {
        const CubicForm c{1.0, 0.0, -0.5, 1.0 / (3.0 * std::sqrt(3.0))};
        const auto r = shengjin_roots(c);
        const Ld nr = vieta_nr();
        const Ld ni = std::sqrt(3.0L * nr * nr - 0.5L);
        CHECK(Real(nr * nr) == doctest::Approx(0.181472).epsilon(1e-5));
        CHECK(Real(ni * ni) == doctest::Approx(0.044416).epsilon(1e-4));
        const std::array<Complex, 3> want{Complex(Real(-2.0L * nr), 0.0), Complex(Real(nr), Real(ni)),
                                          Complex(Real(nr), Real(-ni))};
        CHECK(max_root_gap(r, want) < 1e-14);
        // exact conjugates
        int pair = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j && r[i].imag() != 0.0 && r[i] == std::conj(r[j]))
                    ++pair;
        CHECK(pair == 2);
    }

    TEST_CASE("Shengjin roots agree with the companion-matrix oracle")
    {
        std::mt19937_64 rng(2);
        for (int k = 0; k < 500; ++k) {
            CubicForm c{signed_uniform(rng, 0.1, 3.0), uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0),
                        uniform(rng, -3.0, 3.0)};
            if (k % 5 == 0)
                c.A = 0.0;
            const auto r = shengjin_roots(c);
            const auto o = companion_roots(c);
            Real scale = 1.0;
            for (const auto& z : o)
                scale = std::max(scale, std::abs(z));
            CHECK(max_root_gap(r, o) < 1e-12 * scale);
            CHECK(max_root_gap(o, r) < 1e-12 * scale);
            for (const auto& z : r)
                CHECK(rel_residual(c, z) < 1e-12);
        }
    }

    TEST_CASE("near-double roots stay accurate")
    {
        // (t - 1)^2 (t + 2) perturbed
        for (Real d : {0.0, 1e-14, 1e-10, -1e-12}) {
            const CubicForm c{1.0, 0.0, -3.0, 2.0 + d};
            for (const auto& z : shengjin_roots(c))
                CHECK(rel_residual(c, z) < 1e-12);
        }
        for (const auto& z : shengjin_roots(CubicForm{1.0, -3.0, 3.0, -1.0}))
            CHECK(std::abs(z - 1.0) < 1e-5);
    }

    TEST_CASE("example reduces to t^3 - t/2 + 1/(3 sqrt 3) at leading order")
    {
        const auto s = cubic_example(0.1, 0.0);
        const auto red = reduce_to_cubic(s, unique_pulse(s));
        // nu = 0 leaves both nonlinearities affine
        CHECK(red.family == Family::linear);
        const Real k = 1.0 / red.cubic.leading;
        CHECK(red.cubic.A * k == 0.0);
        CHECK(red.cubic.B * k == doctest::Approx(-0.5).epsilon(1e-15));
        CHECK(red.cubic.E * k == doctest::Approx(1.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-15));
    }

    TEST_CASE("depressed linear cubic has scaled cube roots")
    {
        ReactionSystem s;
        s.params = SystemParams{0.3, 1.2, 0.8, 0.5, 2.0, 0.1};
        s.G1 = BivariatePoly({{0, 0, 1.0}, {0, 1, 0.7}});
        s.G2 = BivariatePoly({{0, 0, 1.0}});
        const auto red = reduce_to_cubic(s, unique_pulse(s));
        REQUIRE(red.family == Family::linear);
        CHECK(red.cubic.leading == 2.0);
        CHECK(red.cubic.A == 0.0);
        CHECK(red.cubic.B == 0.0);
        const Real E = 0.5 * 1.2 * 0.7 / (std::sqrt(2.0) + 1.0);
        CHECK(red.cubic.E == doctest::Approx(E).epsilon(1e-15));
        const Real rho = std::cbrt(E / 2.0);
        for (const auto& t : red.t_roots)
            CHECK(std::abs(std::abs(t) - rho) < 1e-14);
    }

    TEST_CASE("cubic path and determinant path give the same eigenvalues")
    {
        std::mt19937_64 rng(8);
        for (auto f : all_families) {
            for (int k = 0; k < 15; ++k) {
                const auto inst = random_family(f, rng);
                const auto red = reduce_to_cubic(inst.sys, inst.pulse, f);
                const auto lin = linearize(inst.sys, inst.pulse);
                for (const auto& t : red.t_roots)
                    CHECK(rel_residual(red.cubic, t) < 1e-12);
                std::vector<Complex> cubic_l;
                for (const auto& l : red.lambda_roots)
                    if (std::abs(l.imag()) > 1e-6 || l.real() > -inst.pulse.mu + 1e-4)
                        cubic_l.push_back(l);
                for (const auto& l : cubic_l)
                    CHECK_MESSAGE(std::abs(scaled_determinant(lin, l)) < 1e-9 * (1.0 + std::pow(std::abs(l), 1.5)),
                                  std::string(to_string(f)) << " lambda " << l);
                SearchRect rect{-inst.pulse.mu + 1e-3, 50.0, -50.0, 50.0};
                const auto det_l = find_eigenvalues(lin, rect);
                std::vector<Complex> det_vals;
                for (const auto& e : det_l)
                    det_vals.push_back(e.lambda);
                std::vector<Complex> inside;
                for (const auto& l : cubic_l)
                    if (l.real() > rect.re_min + 1e-6 && l.real() < rect.re_max && std::abs(l.imag()) < rect.im_max)
                        inside.push_back(l);
                CHECK_MESSAGE(det_vals.size() == inside.size(), std::string(to_string(f)));
                CHECK_MESSAGE(max_root_gap(inside, det_vals) < 1e-10 * (1.0 + rect.re_max), std::string(to_string(f)));
            }
        }
    }

    TEST_CASE("determinant is dominated by the diffusion product for large lambda")
    {
        const auto s = cubic_example(0.1, 0.0);
        const auto p = unique_pulse(s);
        const auto lin = linearize(s, p);
        for (Real lam : {1e3, 1e5, 1e7}) {
            const Complex t = std::sqrt(0.1 + lam);
            const Complex lead = 2.0 * t * 2.0 * std::sqrt(s.params.D) * t;
            const Complex d = forward_matrix(lin, t).determinant();
            CHECK(std::abs(d / lead - 1.0) < 10.0 / std::sqrt(lam));
            CHECK(std::abs(eigen_determinant(s, p, Complex(lam, 0.0))) > 0.0);
        }
        CHECK_THROWS_AS(eigen_determinant(s, p, Complex(-0.5, 0.0)), Error);
    }

    TEST_CASE("single-term quadratic family: three explicit roots, no Hopf")
    {
        // G1 = G11 + G15 U2^2, G2 = G21: (mu + lambda)^(3/2) = -E.
        std::mt19937_64 rng(13);
        for (int k = 0; k < 20; ++k) {
            const auto inst = random_family(Family::g15_g21, rng);
            const auto red = reduce_to_cubic(inst.sys, inst.pulse, Family::g15_g21);
            const Real r = std::cbrt(std::abs(red.cubic.E / red.cubic.leading));
            for (const auto& l : red.lambda_roots) {
                const Complex ml = l + inst.pulse.mu;
                if (std::abs(ml.imag()) > 1e-9)
                    CHECK(ml.real() == doctest::Approx(-r * r / 2.0).epsilon(1e-12));
            }
            const auto v = classify_stability(inst.sys, inst.pulse);
            for (const auto& e : v.eigenvalues)
                CHECK_FALSE((std::abs(e.lambda.real()) < 1e-8 && std::abs(e.lambda.imag()) > 1e-8));
        }
    }

    TEST_CASE("stability of the example below and above the Hopf point")
    {
        const auto s2 = cubic_example(0.2, 0.0);
        CHECK(classify_stability(s2, unique_pulse(s2)).stable);
        const auto s1 = cubic_example(0.1, 0.0);
        const auto v = classify_stability(s1, unique_pulse(s1));
        CHECK_FALSE(v.stable);
        REQUIRE(v.leading_eigenvalue);
        CHECK(v.leading_eigenvalue->real() > 0.0);
        CHECK(std::abs(v.leading_eigenvalue->imag()) > 1e-3);
        CHECK(v.essential_spectrum_edge == -0.1);
    }

    TEST_CASE("eigenvalue sets are conjugate-closed and off the essential spectrum")
    {
        std::mt19937_64 rng(3);
        for (int k = 0; k < 20; ++k) {
            const auto inst = random_family(all_families[k % all_families.size()], rng);
            const auto v = classify_stability(inst.sys, inst.pulse);
            std::vector<Complex> l;
            for (const auto& e : v.eigenvalues) {
                l.push_back(e.lambda);
                const bool off_cut = e.lambda.real() > -inst.pulse.mu || std::abs(e.lambda.imag()) > 1e-6;
                CHECK(off_cut);
                CHECK(std::max(std::abs(e.C3), std::abs(e.C4)) == doctest::Approx(1.0).epsilon(1e-14));
                CHECK(e.det_abs < 1e-10);
            }
            std::vector<Complex> conj;
            for (const auto& z : l)
                conj.push_back(std::conj(z));
            CHECK(max_root_gap(l, conj) < 1e-12 * (1.0 + (l.empty() ? 0.0 : std::abs(l[0]))));
            if (!l.empty()) {
                bool neg = std::all_of(l.begin(), l.end(), [](Complex z) { return z.real() < 0.0; });
                CHECK(v.stable == neg);
            }
        }
    }

    TEST_CASE("double positive root gives a real leading eigenvalue")
    {
        // Linear family with H(t) = 2 (t - t0)^2 (t + t1): A = 2(t1 - 2 t0),
        // B = 2(t0^2 - 2 t0 t1), E = 2 t0^2 t1. Solve for G12, G13, G23 given
        // alpha, beta, b, D and G22 = 1.
        const Real t0 = 0.8, t1 = 0.5;
        const Real A = 2.0 * (t1 - 2.0 * t0), B = 2.0 * (t0 * t0 - 2.0 * t0 * t1), E = 2.0 * t0 * t0 * t1;
        const Real al = 1.0, be = 1.0, b = 0.5, D = 4.0, sD = 2.0;
        const Real G13 = E * (sD + 1.0) / (b * al);
        // A = -(al G12 + be G23 / sD), B = al be / (2 sD) (G12 G23 - G13 G22)
        // take G23 = 0: G12 = -A / al, then B = -al be G13 G22 / (2 sD)
        const Real G12 = -A / al;
        const Real G22 = -B * 2.0 * sD / (al * be * G13);
        ReactionSystem s;
        s.params = SystemParams{0.3, al, be, b, D, 0.1};
        s.G1 = BivariatePoly({{0, 0, 1.0}, {1, 0, G12}, {0, 1, G13}});
        s.G2 = BivariatePoly({{0, 0, 1.0}, {1, 0, G22}});
        const auto p = unique_pulse(s);
        const auto red = reduce_to_cubic(s, p);
        CHECK(red.cubic(t0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(red.cubic.derivative(t0) == doctest::Approx(0.0).epsilon(1e-12));
        const auto v = classify_stability(s, p);
        REQUIRE(v.leading_eigenvalue);
        CHECK(std::abs(v.leading_eigenvalue->imag()) < 1e-6);
        CHECK(v.leading_eigenvalue->real() == doctest::Approx(t0 * t0 - 0.3).epsilon(1e-5));
    }

    TEST_CASE("empty right half-plane rectangle for a stable pulse")
    {
        const auto s = cubic_example(0.2, 0.0);
        const auto p = unique_pulse(s);
        CHECK(find_eigenvalues(s, p, SearchRect{0.01, 5.0, -5.0, 5.0}).empty());
    }

    TEST_CASE("family detection")
    {
        CHECK(detect_family(cubic_example(0.1, 0.0)) == Family::linear);
        CHECK(detect_family(cubic_example(0.1, 0.01)) == Family::g13_g22_cubic);
        std::mt19937_64 rng(1);
        for (auto f : all_families)
            CHECK(detect_family(random_family_system(f, rng)) == f);
        ReactionSystem odd = cubic_example(0.1, 0.0);
        odd.G2 = BivariatePoly({{4, 1, 1.0}});
        CHECK_FALSE(detect_family(odd));
        const auto p = unique_pulse(cubic_example(0.1, 0.0));
        CHECK_THROWS_AS(reduce_to_cubic(odd, p), Error);
        for (auto f : all_families)
            CHECK(family_from_string(to_string(f)) == f);
    }

    TEST_CASE("eigenvalues vary continuously across D = 1")
    {
        std::mt19937_64 rng(17);
        for (int k = 0; k < 5; ++k) {
            auto s = random_linear(rng);
            s.params.D = 1.0;
            const auto p1 = unique_pulse(s);
            const auto v1 = find_eigenvalues(s, p1, default_search_rect(s.params.mu));
            for (Real d : {1e-4, -1e-4}) {
                auto sd = s;
                sd.params.D = 1.0 + d;
                const auto pd = unique_pulse(sd);
                const auto vd = find_eigenvalues(sd, pd, default_search_rect(s.params.mu));
                REQUIRE(vd.size() == v1.size());
                for (std::size_t i = 0; i < v1.size(); ++i)
                    CHECK(std::abs(vd[i].lambda - v1[i].lambda) <= 1e-3 * std::abs(v1[i].lambda));
            }
        }
    }
}
