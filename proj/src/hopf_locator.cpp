#include "pulsekit/hopf_locator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace pulsekit {

namespace {

constexpr Real nan_value = std::numeric_limits<Real>::quiet_NaN();

/// Real cube root of the square, as in the printed cbrt((...)^2) terms.
Real cbrt_sq(Real x)
{
    return std::cbrt(x * x);
}

Real safe_sqrt(Real x)
{
    return x >= 0.0 ? std::sqrt(x) : nan_value;
}

AssumptionEntry greater(const std::string& name, Real lhs, Real rhs)
{
    const Real s = lhs - rhs;
    return {name, std::isfinite(s) && s > 0.0, s};
}

AssumptionEntry at_most(const std::string& name, Real lhs, Real rhs)
{
    const Real s = rhs - lhs;
    return {name, std::isfinite(s) && s >= 0.0, s};
}

/// Residual of a root-existence condition in mu at the pulse constants.
using RootResidual = std::function<Real(const SystemParams&, Real C1, Real W)>;

bool admits_positive_root(const ReactionSystem& sys, const PinnedPulse& start, const RootResidual& h)
{
    const int n = 512;
    const Real mu_max = 10.0;
    std::vector<Real> val(n + 1, nan_value);
    const int k0 = std::clamp(static_cast<int>(std::lround(start.mu / mu_max * n)), 1, n);
    for (int dir : {+1, -1}) {
        PinnedPulse prev = start;
        for (int k = (dir > 0 ? k0 : k0 - 1); k >= 1 && k <= n; k += dir) {
            const auto s = sys.with_mu(mu_max * k / n);
            auto p = refine_pulse(s, prev.C1, prev.C2);
            if (!p)
                break;
            val[k] = h(s.params, p->C1, p->center2());
            prev = *p;
        }
    }
    for (int k = 1; k <= n; ++k) {
        if (val[k] == 0.0)
            return true;
        if (k > 1 && std::isfinite(val[k]) && std::isfinite(val[k - 1]) && val[k] * val[k - 1] < 0.0)
            return true;
    }
    return false;
}

AssumptionEntry root_condition(const std::string& name, const ReactionSystem& sys, const PinnedPulse& pulse,
                               const RootResidual& h)
{
    SystemParams p = sys.params;
    p.mu = pulse.mu;
    return {name, admits_positive_root(sys, pulse, h), h(p, pulse.C1, pulse.center2())};
}

struct Coeffs {
    Real G11, G13, G15, G21, G22, G23, G24, G25;
    explicit Coeffs(const ReactionSystem& s)
        : G11(s.G1.coeff(0, 0)), G13(s.G1.coeff(0, 1)), G15(s.G1.coeff(0, 2)), G21(s.G2.coeff(0, 0)),
          G22(s.G2.coeff(1, 0)), G23(s.G2.coeff(0, 1)), G24(s.G2.coeff(2, 0)), G25(s.G2.coeff(0, 2))
    {
    }
};

} // namespace

bool AssumptionAudit::all_satisfied() const
{
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.satisfied; });
}

const AssumptionEntry* AssumptionAudit::find(const std::string& name) const
{
    for (const auto& e : entries)
        if (e.name == name)
            return &e;
    return nullptr;
}

AssumptionAudit audit_assumptions(const ReactionSystem& sys, Family family, const PinnedPulse& pulse)
{
    if (!fits_family(sys, family)) {
        std::ostringstream msg;
        msg << "system does not match family " << to_string(family);
        throw Error(ErrorKind::unsupported_family, msg.str());
    }
    SystemParams p = sys.params;
    p.mu = pulse.mu;
    const Coeffs g(sys);
    const Real mu = p.mu, al = p.alpha, be = p.beta, b = p.b, D = p.D, sD = std::sqrt(D);
    const Real sm = std::sqrt(mu);
    const Real C1 = pulse.C1;
    const Real W = pulse.center2();

    AssumptionAudit a;
    a.family = family;
    a.mu = mu;
    auto& e = a.entries;

    switch (family) {
    case Family::g15_g21: {
        const Real delta = 4.0 * mu + 4.0 * al * g.G15 * b / ((1.0 + sD) * mu) *
                                          (be * g.G21 / sD - al * b * g.G11 / (mu * (1.0 + sD)));
        e.push_back(greater("existence", delta, 0.0));
        break;
    }
    case Family::g15_g22: {
        const Real m = be * g.G22 / (2.0 * std::sqrt(mu * D)) - b / (mu * (1.0 + sD));
        e.push_back(greater("A1", 4.0 * mu - 4.0 * al * al * g.G15 * g.G11 * m * m, 0.0));
        const Real E1 = al * b * g.G15 / (1.0 + sD) * W;
        const Real P = al * be * g.G15 * g.G22 * W;
        e.push_back(greater("A2", E1, 0.0));
        e.push_back(greater("A3", P, 0.0));
        const Real third = P / 3.0;
        e.push_back(greater("A4", std::pow(safe_sqrt(third), 3) + E1 - P * safe_sqrt(third), 0.0));
        const RootResidual a5 = [&g](const SystemParams& q, Real, Real w) {
            const Real sq = std::sqrt(q.D);
            const Real x = w * q.alpha * q.b * g.G15 / (1.0 + sq);
            const Real y = w * q.alpha * q.beta * g.G22 * g.G15 / (2.0 * sq);
            const Real delta = 81.0 * x * x - 12.0 * y * y * y;
            const Real sd = safe_sqrt(delta);
            const Real yp = 1.5 * (-9.0 * x + sd), ym = 1.5 * (-9.0 * x - sd);
            const Real zp = -27.0 * x / 2.0 + 1.5 * sd, zm = -27.0 * x / 2.0 - 1.5 * sd;
            return 2.0 * std::cbrt(yp) * std::cbrt(ym) - 0.5 * cbrt_sq(zp) - 0.5 * cbrt_sq(zm) - 9.0 * q.mu;
        };
        e.push_back(root_condition("A5", sys, pulse, a5));
        break;
    }
    case Family::g15_g23: {
        const Real f = 2.0 * b / ((D - 1.0) * sm) * (sD - D) / (2.0 * std::sqrt(mu * D) - be * g.G23);
        e.push_back(greater("A6", 4.0 * mu - 4.0 * al * al * g.G11 * g.G15 * f * f, 0.0));
        // B is the Shengjin B of the family cubic 2 sqrt(D) t^3 - beta G23 t^2 + d = 0.
        const auto radicals = [&g](const SystemParams& q, Real w) {
            const Real sq = std::sqrt(q.D);
            const Real d7 = -2.0 * q.alpha * q.b * sq * g.G15 * w / (1.0 + sq);
            const Real bg = q.beta * g.G23;
            const Real delta = d7 * (324.0 * q.D * d7 + 12.0 * bg * bg * bg);
            const Real Bs = 18.0 * sq * d7;
            const Real sd = safe_sqrt(delta);
            const Real yp = -bg * bg * bg + 3.0 * sq * (-Bs + sd);
            const Real ym = -bg * bg * bg + 3.0 * sq * (-Bs - sd);
            return std::array<Real, 4>{delta, yp, ym, bg};
        };
        const auto r = radicals(p, W);
        e.push_back(greater("A7", r[0], 0.0));
        e.push_back(at_most("A8", r[3] - std::cbrt(r[1]) - std::cbrt(r[2]), 0.0));
        const RootResidual a9 = [radicals](const SystemParams& q, Real, Real w) {
            const auto v = radicals(q, w);
            const Real cp = std::cbrt(v[1]), cm = std::cbrt(v[2]), bg = v[3];
            return -0.5 * cbrt_sq(v[1]) - 0.5 * cbrt_sq(v[2]) + bg * bg + bg * (cp + cm) + 2.0 * cp * cm -
                   36.0 * q.D * q.mu;
        };
        e.push_back(root_condition("A9", sys, pulse, a9));
        break;
    }
    case Family::g13_g24: {
        const Real q10 = 2.0 * mu + al * g.G13 * b / ((sD + 1.0) * sm);
        e.push_back(greater("A10", std::sqrt(D / mu) * q10 * q10, 2.0 * al * al * be * g.G11 * g.G13 * g.G24));
        const Real bgc = be * g.G24 * C1;
        e.push_back(greater("A11", 27.0 * D * sD * b * b, 2.0 * al * g.G13 * bgc * bgc * bgc * (1.0 + sD) * (1.0 + sD)));
        e.push_back(greater("A12", al * b * g.G13, 0.0));
        const RootResidual a13 = [&g](const SystemParams& q, Real c1, Real) {
            const Real sq = std::sqrt(q.D);
            const Real k = 18.0 * q.alpha * q.D * q.b * g.G13 / (1.0 + sq);
            const Real x = q.alpha * q.beta * g.G13 * g.G24 * c1;
            const Real sd = safe_sqrt(k * k - 24.0 * sq * x * x * x);
            const Real yp = -3.0 * sq * (k + sd), ym = -3.0 * sq * (k - sd);
            return -cbrt_sq(yp) - cbrt_sq(ym) + 4.0 * std::cbrt(yp) * std::cbrt(ym) - 72.0 * q.D * q.mu;
        };
        e.push_back(root_condition("A13", sys, pulse, a13));
        break;
    }
    case Family::g13_g25: {
        const Real t14 = 4.0 * sm * g.G11 / al + 4.0 * sD * g.G13 * mu / (al * be * g.G25) +
                         2.0 * b * g.G13 * g.G13 * (D - sD) / (be * sm * (D - 1.0) * g.G25);
        e.push_back(greater("A14", t14 * t14,
                            16.0 * mu / (al * al) *
                                (g.G11 * g.G11 + 2.0 * std::sqrt(D * mu) * g.G11 * g.G13 / (be * g.G25))));
        const Real bgw = be * g.G25 * W;
        const Real q15 = b * (D - sD) / (D - 1.0);
        e.push_back(greater("A15", 27.0 * D * q15 * q15, 8.0 * b * (D - sD) / (al * g.G13 * (D - 1.0)) * bgw * bgw * bgw));
        const auto radicals = [&g](const SystemParams& q, Real w) {
            const Real sq = std::sqrt(q.D);
            const Real ag = q.alpha * g.G13;
            const Real k = q.beta * g.G25 * w / ag;
            const Real m = 18.0 * q.b * q.D / (ag * (sq + 1.0));
            const Real delta = m * m - 96.0 * q.b * sq / (sq + 1.0) * k * k * k;
            const Real sd = safe_sqrt(delta);
            const Real zp = -8.0 * k * k * k + 3.0 * sq / ag * (m + sd);
            const Real zm = -8.0 * k * k * k + 3.0 * sq / ag * (m - sd);
            return std::array<Real, 4>{zp, zm, k, ag};
        };
        const auto r = radicals(p, W);
        e.push_back(at_most("A16", 2.0 * bgw, r[3] * (std::cbrt(r[0]) + std::cbrt(r[1]))));
        const RootResidual a17 = [radicals, &g](const SystemParams& q, Real, Real w) {
            const auto v = radicals(q, w);
            const Real k = v[2];
            const Real lhs = q.alpha * q.alpha * g.G13 * g.G13 / (36.0 * q.D) * q.mu;
            const Real rhs = -0.5 * cbrt_sq(v[0]) - 0.5 * cbrt_sq(v[1]) +
                             safe_sqrt(v[0]) * safe_sqrt(v[1]) * (2.0 + 2.0 * k) + 4.0 * k * k;
            return rhs - lhs;
        };
        e.push_back(root_condition("A17", sys, pulse, a17));
        break;
    }
    case Family::linear:
    case Family::g13_g26:
    case Family::g13_g22_cubic:
        break;
    }
    return a;
}

AssumptionAudit audit_assumptions(const ReactionSystem& sys, Family family, Real mu)
{
    const auto s = sys.with_mu(mu);
    return audit_assumptions(s, family, unique_pulse(s));
}

namespace {

std::optional<Complex> upper_pair(const CubicForm& c)
{
    const auto roots = shengjin_roots(c);
    for (const auto& t : roots)
        if (t.imag() > 1e-12 * std::abs(t) && t.real() > 0.0)
            return t;
    return std::nullopt;
}

bool pulse_dependent(Family f, const ReactionSystem& sys)
{
    if (f == Family::linear)
        return false;
    if (f == Family::g13_g22_cubic)
        return sys.G1.coeff(3, 0) != 0.0;
    return true;
}

/// Cubic pair along a pulse branch continued from a reference pulse.
struct PairTrack {
    const ReactionSystem& sys;
    Family family;
    PinnedPulse pulse;

    std::optional<Complex> at(Real mu)
    {
        const auto s = sys.with_mu(mu);
        auto p = refine_pulse(s, pulse.C1, pulse.C2);
        if (!p)
            return std::nullopt;
        pulse = *p;
        return upper_pair(reduce_to_cubic(s, pulse, family).cubic);
    }
};

HopfPoint finish_hopf(const ReactionSystem& sys, const PinnedPulse& pulse, Complex t, Real transversality,
                      std::optional<Family> family)
{
    HopfPoint h;
    h.n_r = t.real();
    h.n_i = t.imag();
    h.mu_hat = h.n_r * h.n_r - h.n_i * h.n_i;
    h.omega_H = 2.0 * h.n_r * h.n_i;
    h.pulse = pulse;
    h.family = family;
    h.transversality = transversality;
    auto lin = linearize(sys.with_mu(pulse.mu), pulse);
    h.eigen = eigen_solution_at(lin, Complex(0.0, h.omega_H));
    return h;
}

} // namespace

std::optional<HopfPoint> locate_hopf_closed_form(const CubicReduction& red, const ReactionSystem& sys)
{
    auto t = upper_pair(red.cubic);
    if (!t)
        return std::nullopt;
    const Real h = 1e-6;

    if (!pulse_dependent(red.family, sys)) {
        const Real mu_hat = t->real() * t->real() - t->imag() * t->imag();
        if (!(mu_hat > 0.0))
            return std::nullopt;
        const auto s = sys.with_mu(mu_hat);
        PinnedPulse pulse;
        try {
            pulse = select_pulse(s, red.pulse.C1, red.pulse.C2);
        } catch (const Error&) {
            return std::nullopt;
        }
        // Re lambda = Re t^2 - mu with t independent of mu.
        const Real re_plus = (*t * *t).real() - (mu_hat + h);
        const Real re_minus = (*t * *t).real() - (mu_hat - h);
        return finish_hopf(s, pulse, *t, (re_plus - re_minus) / (2.0 * h), red.family);
    }

    // Secant on g(mu) = Re t(mu)^2 - mu along the pulse branch.
    PairTrack track{sys, red.family, red.pulse};
    const auto g = [&](Real mu) -> std::optional<Real> {
        auto tt = track.at(mu);
        if (!tt)
            return std::nullopt;
        return (*tt * *tt).real() - mu;
    };
    Real m0 = red.mu;
    auto g0 = g(m0);
    if (!g0)
        return std::nullopt;
    Real m1 = m0 + *g0;
    if (!(m1 > 0.0))
        m1 = 0.5 * m0;
    for (int it = 0; it < 100; ++it) {
        auto g1 = g(m1);
        if (!g1)
            return std::nullopt;
        if (std::abs(*g1) <= 1e-14 * (1.0 + m1) || std::abs(m1 - m0) <= 1e-13 * (1.0 + m1)) {
            auto tt = track.at(m1);
            if (!tt)
                return std::nullopt;
            const PinnedPulse pulse = track.pulse;
            auto gp = g(m1 + h);
            PairTrack back{sys, red.family, pulse};
            auto tm = back.at(m1 - h);
            if (!gp || !tm)
                return std::nullopt;
            const Real gm = (*tm * *tm).real() - (m1 - h);
            const Complex t_hat = std::sqrt(Complex(m1, (*tt * *tt).imag()));
            return finish_hopf(sys.with_mu(m1), pulse, t_hat, (*gp - gm) / (2.0 * h), red.family);
        }
        const Real denom = *g1 - *g0;
        Real m2 = denom != 0.0 ? m1 - *g1 * (m1 - m0) / denom : m1 + *g1;
        m2 = std::clamp(m2, 0.5 * m1, 1.5 * m1 + 1e-3);
        m0 = m1;
        g0 = g1;
        m1 = m2;
    }
    return std::nullopt;
}

namespace {

struct ScanSample {
    Real mu = 0.0;
    PinnedPulse pulse;
    std::optional<Complex> lambda;
};

std::optional<Complex> leading_pair(const CoreLinearization& lin, Real min_imag)
{
    std::optional<Complex> best;
    for (const auto& e : find_eigenvalues(lin, default_search_rect(lin.params.mu)))
        if (e.lambda.imag() > min_imag && (!best || e.lambda.real() > best->real()))
            best = e.lambda;
    return best;
}

PinnedPulse continue_pulse(const ReactionSystem& sys, const PinnedPulse& prev, Real lo, Real hi)
{
    if (auto p = refine_pulse(sys, prev.C1, prev.C2))
        return *p;
    const auto lost = [&] {
        std::ostringstream msg;
        msg << "pulse branch disappears inside mu in [" << lo << ", " << hi << "]";
        return Error(ErrorKind::continuation, msg.str());
    };
    auto roots = solve_pulse(sys, {{prev.C1, prev.C2}});
    if (roots.empty())
        throw lost();
    const auto dist = [&](const PinnedPulse& a) { return std::hypot(a.C1 - prev.C1, a.C2 - prev.C2); };
    const auto best = *std::min_element(roots.begin(), roots.end(),
                                        [&](const auto& a, const auto& b) { return dist(a) < dist(b); });
    // A distant nearest root means the branch folded and we would jump.
    if (dist(best) > 0.25 * (1.0 + std::hypot(prev.C1, prev.C2)))
        throw lost();
    return best;
}

} // namespace

std::vector<HopfPoint> locate_hopf_scan(const ReactionSystem& sys, Real mu_min, Real mu_max, int steps,
                                        std::optional<std::pair<Real, Real>> seed, const ScanOptions& opt)
{
    if (!(mu_min > 0.0 && mu_max > mu_min && steps >= 1))
        throw Error(ErrorKind::domain, "scan requires 0 < mu_min < mu_max and steps >= 1");
    const auto family = detect_family(sys);
    std::vector<ScanSample> samples;
    PinnedPulse prev;
    for (int k = 0; k <= steps; ++k) {
        const Real mu = mu_min + (mu_max - mu_min) * k / steps;
        const auto s = sys.with_mu(mu);
        ScanSample smp;
        smp.mu = mu;
        if (k == 0)
            smp.pulse = seed ? select_pulse(s, seed->first, seed->second) : unique_pulse(s);
        else
            smp.pulse = continue_pulse(s, prev, samples.back().mu, mu);
        prev = smp.pulse;
        smp.lambda = leading_pair(linearize(s, smp.pulse), opt.min_imag);
        samples.push_back(smp);
    }

    std::vector<HopfPoint> out;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const auto& L = samples[k - 1];
        const auto& R = samples[k];
        if (!L.lambda || !R.lambda)
            continue;
        const Real gl = L.lambda->real(), gr = R.lambda->real();
        if (!(gl * gr <= 0.0) || (gl == 0.0 && gr == 0.0))
            continue;

        Real a = L.mu, b = R.mu;
        PinnedPulse pa = L.pulse;
        Complex la = *L.lambda, lb = *R.lambda;
        Real fa = gl;
        const auto eval = [&](Real mu, const PinnedPulse& from, Complex guess, PinnedPulse& pulse_out,
                              Complex& lam_out) {
            const auto s = sys.with_mu(mu);
            pulse_out = continue_pulse(s, from, a, b);
            auto z = polish_eigenvalue(linearize(s, pulse_out), guess);
            if (!z || z->imag() <= opt.min_imag)
                throw Error(ErrorKind::search_failure, "lost the complex pair while bisecting");
            lam_out = *z;
        };
        while (b - a > opt.bisect_tol) {
            const Real m = 0.5 * (a + b);
            PinnedPulse pm;
            Complex lm;
            eval(m, pa, 0.5 * (la + lb), pm, lm);
            if ((lm.real() < 0.0) == (fa < 0.0)) {
                a = m;
                pa = pm;
                la = lm;
                fa = lm.real();
            } else {
                b = m;
                lb = lm;
            }
        }
        const Real mu_hat = 0.5 * (a + b);
        PinnedPulse ph;
        Complex lh;
        eval(mu_hat, pa, la, ph, lh);
        PinnedPulse tmp;
        Complex lp, lmn;
        eval(mu_hat + opt.transversality_h, ph, lh, tmp, lp);
        eval(mu_hat - opt.transversality_h, ph, lh, tmp, lmn);
        const Real trans = (lp.real() - lmn.real()) / (2.0 * opt.transversality_h);
        const Complex t = std::sqrt(Complex(mu_hat, lh.imag()));
        out.push_back(finish_hopf(sys.with_mu(mu_hat), ph, t, trans, family));
        out.back().mu_hat = mu_hat;
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.mu_hat < y.mu_hat; });
    return out;
}

} // namespace pulsekit
