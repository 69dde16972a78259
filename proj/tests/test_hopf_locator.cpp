#include <doctest.h>

#include <chrono>
#include <random>

#include "pulsekit/hopf_locator.hpp"
#include "support.hpp"

using namespace pulsekit;
using namespace pulsekit::testing;

namespace {

HopfPoint example_hopf()
{
    const auto s = cubic_example(0.1, 0.0);
    const auto h = locate_hopf_closed_form(reduce_to_cubic(s, unique_pulse(s)), s);
    REQUIRE(h);
    return *h;
}

/// G1 = G11 + G15 U2^2, G2 = G21 with a pulse for every mu > 0.
ReactionSystem quadratic_constant_system()
{
    ReactionSystem s;
    s.params = SystemParams{0.5, 1.0, 1.0, 0.5, 4.0, 0.1};
    s.G1 = BivariatePoly({{0, 0, -1.0}, {0, 2, 1.0}});
    s.G2 = BivariatePoly({{0, 0, 1.0}});
    return s;
}

std::optional<std::pair<Real, Real>> first_pulse(const ReactionSystem& s)
{
    for (const auto& p : solve_pulse(s))
        if (!p.degenerate)
            return std::make_pair(p.C1, p.C2);
    return std::nullopt;
}

} // namespace

TEST_SUITE("hopf_locator")
{
    TEST_CASE("closed form reproduces the radical Hopf point")
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto h = example_hopf();
        const Real dt = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
        CHECK(std::abs(h.mu_hat - Real(radical_mu_hat())) < 1e-8);
        CHECK(std::abs(h.omega_H - Real(radical_omega())) < 1e-8);
        CHECK(Real(radical_mu_hat()) == doctest::Approx(0.137058).epsilon(1e-5));
        CHECK(Real(radical_omega()) == doctest::Approx(0.179551).epsilon(1e-5));
        CHECK(dt < 1.0);
        CHECK(h.family == Family::linear);
    }

    TEST_CASE("scan finds the same single Hopf point")
    {
        const auto pts = locate_hopf_scan(cubic_example(0.1, 0.0), 0.05, 0.3, 64);
        REQUIRE(pts.size() == 1);
        const auto h = example_hopf();
        CHECK(std::abs(pts[0].mu_hat - h.mu_hat) < 1e-8);
        CHECK(std::abs(pts[0].omega_H - h.omega_H) < 1e-8);
        CHECK(std::abs(pts[0].mu_hat - Real(radical_mu_hat())) < 1e-8);
    }

    TEST_CASE("Hopf point invariants")
    {
        for (const auto& h : {example_hopf(), locate_hopf_scan(cubic_example(0.1, 0.0), 0.05, 0.3, 64).at(0)}) {
            CHECK(std::abs(h.omega_H - 2.0 * h.n_r * h.n_i) < 1e-10);
            CHECK(std::abs(h.mu_hat - (h.n_r * h.n_r - h.n_i * h.n_i)) < 1e-10);
            CHECK(std::abs(h.eigen.lambda.real()) < 1e-10);
            CHECK(std::abs(std::abs(h.eigen.lambda.imag()) - h.omega_H) < 1e-10);
            // stable above mu_hat: Re lambda decreases through zero
            CHECK(h.transversality < -1e-6);
        }
    }

    TEST_CASE("Vieta identities of the generating cubic at the Hopf point")
    {
        const auto h = example_hopf();
        const auto s = cubic_example(h.mu_hat, 0.0);
        const auto red = reduce_to_cubic(s, unique_pulse(s));
        const auto& c = red.cubic;
        const Complex t1(h.n_r, h.n_i), t2(h.n_r, -h.n_i);
        const Complex t3 = -c.A / c.leading - t1 - t2;
        CHECK(std::abs(t1 * t2 + t1 * t3 + t2 * t3 - c.B / c.leading) < 1e-10);
        CHECK(std::abs(t1 * t2 * t3 + c.E / c.leading) < 1e-10);
        CHECK(std::abs(c(t1)) < 1e-10);
    }

    TEST_CASE("stable range has no Hopf point")
    {
        CHECK(locate_hopf_scan(cubic_example(0.2, 0.0), 0.2, 0.3, 16).empty());
    }

    TEST_CASE("single quadratic term with constant G2 never has a Hopf point")
    {
        const auto s = quadratic_constant_system();
        const auto seed = first_pulse(s.with_mu(0.1));
        REQUIRE(seed);
        const auto pts = locate_hopf_scan(s, 0.1, 5.0, 50, seed);
        CHECK(pts.empty());
        const auto p = select_pulse(s.with_mu(1.0), seed->first, seed->second);
        CHECK_FALSE(locate_hopf_closed_form(reduce_to_cubic(s.with_mu(1.0), p), s));
    }

    TEST_CASE("empty existence range surfaces a continuation error")
    {
        // at nu = 0.001 the pulse branch folds near mu = 0.13
        const auto seed = example_pulse_closed_form(0.05);
        CHECK_THROWS_AS(locate_hopf_scan(cubic_example(0.1, 0.001), 0.05, 0.3, 64, seed), Error);
        try {
            locate_hopf_scan(cubic_example(0.1, 0.001), 0.05, 0.3, 64, seed);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::continuation);
            CHECK(std::string(e.what()).find("mu in [") != std::string::npos);
        }
    }

    TEST_CASE("cubic-corrected example: closed form and scan agree")
    {
        const auto s = cubic_example(0.1, -0.001);
        const auto [C1, C2] = example_pulse_closed_form(0.1);
        const auto p = select_pulse(s, C1, C2);
        const auto h = locate_hopf_closed_form(reduce_to_cubic(s, p), s);
        REQUIRE(h);
        const auto pts = locate_hopf_scan(s, 0.05, 0.3, 64, example_pulse_closed_form(0.05));
        REQUIRE(pts.size() == 1);
        CHECK(std::abs(pts[0].mu_hat - h->mu_hat) < 1e-8);
        CHECK(std::abs(pts[0].omega_H - h->omega_H) < 1e-8);
        CHECK(h->family == Family::g13_g22_cubic);
    }

    TEST_CASE("audit with a vanishing quadratic coefficient")
    {
        ReactionSystem s;
        s.params = SystemParams{0.3, 1.0, 1.0, 0.5, 4.0, 0.1};
        s.G1 = BivariatePoly({{0, 0, 1.0}, {0, 2, 0.0}});
        s.G2 = BivariatePoly({{1, 0, 1.0}});
        const auto a = audit_assumptions(s, Family::g15_g22, 0.3);
        REQUIRE(a.find("A2"));
        CHECK_FALSE(a.find("A2")->satisfied);
        CHECK(a.find("A2")->slack == 0.0);
        CHECK_FALSE(a.find("A3")->satisfied);
        CHECK(a.find("A3")->slack == 0.0);
        CHECK_THROWS_AS(audit_assumptions(s, Family::g13_g24, 0.3), Error);
    }

    TEST_CASE("audit entries cover each family's assumption set")
    {
        std::mt19937_64 rng(4);
        const std::vector<std::pair<Family, std::vector<std::string>>> sets{
            {Family::g15_g22, {"A1", "A2", "A3", "A4", "A5"}},
            {Family::g15_g23, {"A6", "A7", "A8", "A9"}},
            {Family::g13_g24, {"A10", "A11", "A12", "A13"}},
            {Family::g13_g25, {"A14", "A15", "A16", "A17"}},
        };
        for (const auto& [f, names] : sets) {
            const auto inst = random_family(f, rng);
            const auto a = audit_assumptions(inst.sys, f, inst.pulse);
            REQUIRE(a.entries.size() == names.size());
            for (std::size_t i = 0; i < names.size(); ++i)
                CHECK(a.entries[i].name == names[i]);
        }
    }

    TEST_CASE("A2 and A3 follow the signs of the reduced cubic")
    {
        std::mt19937_64 rng(9);
        for (int k = 0; k < 30; ++k) {
            const auto inst = random_family(Family::g15_g22, rng);
            const auto red = reduce_to_cubic(inst.sys, inst.pulse, Family::g15_g22);
            const auto a = audit_assumptions(inst.sys, Family::g15_g22, inst.pulse);
            CHECK(a.find("A2")->satisfied == (red.cubic.E > 0.0));
            CHECK(a.find("A3")->satisfied == (red.cubic.B < 0.0));
            CHECK(a.find("A1")->satisfied);
        }
    }

    TEST_CASE("root condition vanishes at a located Hopf point")
    {
        std::mt19937_64 rng(12);
        int found = 0;
        for (int k = 0; k < 400 && found < 3; ++k) {
            const auto inst = random_family(Family::g15_g22, rng);
            const auto red = reduce_to_cubic(inst.sys, inst.pulse, Family::g15_g22);
            std::optional<HopfPoint> h;
            try {
                h = locate_hopf_closed_form(red, inst.sys);
            } catch (const Error&) {
                continue;
            }
            if (!h)
                continue;
            ++found;
            const auto a = audit_assumptions(inst.sys, Family::g15_g22, h->pulse);
            CHECK(std::abs(a.find("A5")->slack) < 1e-8);
            CHECK(a.find("A5")->satisfied);
        }
        CHECK(found > 0);
    }
}
