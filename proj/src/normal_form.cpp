#include "pulsekit/normal_form.hpp"

#include <cmath>
#include <functional>

#include <Eigen/SVD>

namespace pulsekit {

const char* to_string(PsiTag t)
{
    switch (t) {
    case PsiTag::Psi001: return "Psi001";
    case PsiTag::Psi200: return "Psi200";
    case PsiTag::Psi110: return "Psi110";
    }
    return "?";
}

const char* to_string(Criticality c)
{
    switch (c) {
    case Criticality::supercritical: return "supercritical";
    case Criticality::subcritical: return "subcritical";
    case Criticality::degenerate: return "degenerate";
    }
    return "?";
}

const char* to_string(NormalFormMode m)
{
    return m == NormalFormMode::consistent ? "consistent" : "perturbative";
}

namespace {

const BivariatePoly& component(const ReactionSystem& sys, int i)
{
    return i == 0 ? sys.G1 : sys.G2;
}

/// (1/2) sum_jk d2G_i/du_j du_k U_j V_k at the core value u0.
Vec2c quadratic_term(const ReactionSystem& sys, const Vec2& u0, const Vec2c& U, const Vec2c& V)
{
    Vec2c out;
    for (int i = 0; i < 2; ++i) {
        const auto& G = component(sys, i);
        const Real h00 = G.derivative(2, 0, u0(0), u0(1));
        const Real h01 = G.derivative(1, 1, u0(0), u0(1));
        const Real h11 = G.derivative(0, 2, u0(0), u0(1));
        out(i) = 0.5 * (h00 * U(0) * V(0) + h01 * (U(0) * V(1) + U(1) * V(0)) + h11 * U(1) * V(1));
    }
    return out;
}

/// (1/6) sum_jkl d3G_i/du_j du_k du_l U_j V_k W_l at u0.
Vec2c cubic_term(const ReactionSystem& sys, const Vec2& u0, const Vec2c& U, const Vec2c& V, const Vec2c& W)
{
    Vec2c out = Vec2c::Zero();
    for (int i = 0; i < 2; ++i) {
        const auto& G = component(sys, i);
        std::array<Real, 4> T{};
        for (int n = 0; n <= 3; ++n)
            T[n] = G.derivative(3 - n, n, u0(0), u0(1));
        Complex s = 0.0;
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    s += T[j + k + l] * U(j) * V(k) * W(l);
        out(i) = s / 6.0;
    }
    return out;
}

Vec2 core_of(const PinnedPulse& p)
{
    return Vec2(p.center1(), p.center2());
}

Vec2c coupled(const SystemParams& p, const Vec2c& f)
{
    return Vec2c(p.alpha * f(0), p.beta * f(1));
}

/// Sum_i x_i conj(y_i).
Complex dot_conj(const Vec2c& x, const Vec2c& y)
{
    return x(0) * std::conj(y(0)) + x(1) * std::conj(y(1));
}

/// Integral of x^n e^{-r x} over [c, inf).
Complex moment(int n, Complex r, Real c)
{
    Complex sum = 0.0, term = 1.0;
    Real fact = 1.0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) {
            term *= r * c / Real(k);
            fact *= k;
        }
        sum += term;
    }
    return fact * std::exp(-r * c) / std::pow(r, n + 1) * sum;
}

ResolventSolution forced_solve(const CoreLinearization& lin, PsiTag tag, Complex shift, const Vec2c& forcing)
{
    const auto& p = lin.params;
    ResolventSolution r;
    r.tag = tag;
    r.shift = shift;
    r.forcing = forcing;
    if (forcing.isZero(0.0)) {
        r.sol = PiecewiseExpSolution::from_center(p.mu + shift, 0.0, 0.0, p.b, p.D, Coupling::forward);
        return r;
    }
    const Complex t = principal_sqrt(p.mu + shift);
    const Mat2c M = forward_matrix(lin, t);
    Eigen::JacobiSVD<Mat2c> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    if (sv(1) < 1e-10 * std::max<Real>(1.0, sv(0)))
        throw Error(ErrorKind::resonance, std::string(to_string(tag)) + " shift lies on the point spectrum");
    const Vec2c F = coupled(p, forcing);
    const Vec2c v = svd.solve(F);
    r.sol = PiecewiseExpSolution::from_center(p.mu + shift, v(0), v(1), p.b, p.D, Coupling::forward);
    r.fast_amp = r.sol.fast_amp();
    r.slow_amp = r.sol.slow_amp();
    r.residual = (M * v - F).norm() / (M.norm() * v.norm() + F.norm());
    r.zero = false;
    return r;
}

CoreLinearization hopf_linearization(const ReactionSystem& sys, const HopfPoint& hopf)
{
    return linearize(sys.with_mu(hopf.mu_hat), hopf.pulse);
}

Real relative_defect(Complex defect, Real scale)
{
    return scale > 0.0 ? std::abs(defect) / scale : 0.0;
}

struct Assembly {
    Complex I2;
    Complex L1;
    Complex L2;
};

/// I2 at leading order: constants on I_f times unit impurity mass.
Assembly assemble(const ReactionSystem& nonlinear, const HopfPoint& hopf, const AdjointEigenSolution& adj,
                  const ResolventSolution& psi200, const ResolventSolution& psi110, Real cutoff)
{
    const auto& p = nonlinear.params;
    const Vec2 u0 = core_of(hopf.pulse);
    const Vec2c P = hopf.eigen.eigfun.center();
    const Vec2c Pc = P.conjugate();
    Vec2c N = 3.0 * cubic_term(nonlinear, u0, P, P, Pc);
    if (!psi110.zero)
        N += 2.0 * quadratic_term(nonlinear, u0, P, psi110.sol.center());
    if (!psi200.zero)
        N += 2.0 * quadratic_term(nonlinear, u0, Pc, psi200.sol.center());
    Assembly a;
    a.I2 = dot_conj(coupled(p, N), adj.eigfun.center());
    a.L1 = 0.0;
    for (int i = 0; i < 2; ++i)
        a.L1 += half_line_product(hopf.eigen.eigfun, i, adj.eigfun, i, cutoff);
    a.L2 = 2.0 * p.epsilon * dot_conj(P, adj.eigfun.center());
    return a;
}

} // namespace

AdjointEigenSolution solve_adjoint(const ReactionSystem& sys, const HopfPoint& hopf)
{
    const auto lin = hopf_linearization(sys, hopf);
    const auto& p = lin.params;
    const Complex lam(0.0, -hopf.omega_H);
    const Complex q = principal_sqrt(p.mu + lam);
    const Mat2c A = adjoint_matrix(lin, q);
    Eigen::JacobiSVD<Mat2c> svd(A, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    if (sv(1) > 1e-7 * std::max<Real>(1.0, sv(0)))
        throw Error(ErrorKind::consistency, "-i omega_H is not an eigenvalue of the adjoint jump conditions");
    Vec2c w = svd.matrixV().col(1);
    auto sol = PiecewiseExpSolution::from_center(p.mu + lam, w(0), w(1), p.b, p.D, Coupling::adjoint);
    const Complex big =
        std::abs(sol.fast_amp()) >= std::abs(sol.slow_amp()) ? sol.fast_amp() : sol.slow_amp();
    w /= big;
    AdjointEigenSolution out;
    out.eigfun = PiecewiseExpSolution::from_center(p.mu + lam, w(0), w(1), p.b, p.D, Coupling::adjoint);
    out.C5 = out.eigfun.fast_amp();
    out.C6 = out.eigfun.slow_amp();
    out.lambda = lam;
    out.residual = (A * w).norm() / (A.norm() * w.norm());
    return out;
}

ResolventSolution solve_resolvent_quadratic(const ReactionSystem& sys, const HopfPoint& hopf, PsiTag which)
{
    const auto lin = hopf_linearization(sys, hopf);
    const Vec2 u0 = core_of(hopf.pulse);
    const Vec2c P = hopf.eigen.eigfun.center();
    switch (which) {
    case PsiTag::Psi001:
        // The bifurcation parameter does not enter the impurity terms.
        return forced_solve(lin, which, 0.0, Vec2c::Zero());
    case PsiTag::Psi200:
        return forced_solve(lin, which, Complex(0.0, 2.0 * hopf.omega_H), quadratic_term(sys, u0, P, P));
    case PsiTag::Psi110:
        return forced_solve(lin, which, 0.0, 2.0 * quadratic_term(sys, u0, P, P.conjugate()));
    }
    throw Error(ErrorKind::config, "unknown resolvent tag");
}

Complex half_line_product(const PiecewiseExpSolution& u, int i, const PiecewiseExpSolution& v, int j, Real cutoff)
{
    Complex s = 0.0;
    for (const auto& a : u.terms(i))
        for (const auto& b : v.terms(j))
            s += a.coef * std::conj(b.coef) * moment(a.power + b.power, a.rate + std::conj(b.rate), cutoff);
    return s;
}

Complex inner_product(const PiecewiseExpSolution& u, const PiecewiseExpSolution& v, Real cutoff)
{
    return 2.0 * (half_line_product(u, 0, v, 0, cutoff) + half_line_product(u, 1, v, 1, cutoff));
}

Complex half_line_quadrature(const PiecewiseExpSolution& u, const PiecewiseExpSolution& v, Real lo, Real hi,
                             Real rel_tol)
{
    const auto f = [&](Real x) {
        const auto [u1, u2] = u.outer(x);
        const auto [v1, v2] = v.outer(x);
        return u1 * std::conj(v1) + u2 * std::conj(v2);
    };
    const std::function<Complex(Real, Real, Complex, Complex, Complex, Complex, Real, int)> simpson =
        [&](Real a, Real b, Complex fa, Complex fm, Complex fb, Complex whole, Real tol, int depth) -> Complex {
        const Real m = 0.5 * (a + b);
        const Complex flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
        const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const Complex diff = left + right - whole;
        if (depth <= 0 || std::abs(diff) <= 15.0 * tol)
            return left + right + diff / 15.0;
        return simpson(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
               simpson(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    };
    // A coarse first pass sets the absolute tolerance.
    const int n = 64;
    Complex coarse = 0.0;
    std::vector<Complex> fx(n + 1);
    for (int k = 0; k <= n; ++k)
        fx[k] = f(lo + (hi - lo) * k / n);
    for (int k = 0; k < n; ++k)
        coarse += 0.5 * (fx[k] + fx[k + 1]) * (hi - lo) / Real(n);
    const Real tol = rel_tol * std::max(std::abs(coarse), 1e-300) / n;
    Complex total = 0.0;
    for (int k = 0; k < n; ++k) {
        const Real a = lo + (hi - lo) * k / n, b = lo + (hi - lo) * (k + 1) / n;
        const Complex fm = f(0.5 * (a + b));
        const Complex whole = (b - a) / 6.0 * (fx[k] + 4.0 * fm + fx[k + 1]);
        total += simpson(a, b, fx[k], fm, fx[k + 1], whole, tol, 40);
    }
    return total;
}

Complex coefficient_a(const ReactionSystem&, const HopfPoint& hopf, const AdjointEigenSolution& adjoint,
                      const Mat2c& R11)
{
    const auto& P = hopf.eigen.eigfun;
    const auto& Q = adjoint.eigfun;
    Complex h[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            h[i][j] = half_line_product(P, j, Q, i, 0.0);
    const Complex den = 2.0 * h[0][0] + 2.0 * h[1][1];
    const Complex num = (R11(0, 0) * (2.0 * h[0][0]) + R11(0, 1) * (2.0 * h[0][1])) +
                        (R11(1, 0) * (2.0 * h[1][0]) + R11(1, 1) * (2.0 * h[1][1]));
    const Real scale = std::sqrt(std::abs(inner_product(P, P)) * std::abs(inner_product(Q, Q)));
    if (std::abs(den) <= 1e-14 * scale)
        throw Error(ErrorKind::degeneracy, "<P, P*> vanishes; the Hopf eigenvalue is not simple");
    return num / den;
}

Criticality classify(Complex b)
{
    if (std::abs(b.real()) < 1e-10)
        return Criticality::degenerate;
    return b.real() < 0.0 ? Criticality::supercritical : Criticality::subcritical;
}

namespace {

NormalFormData finish_data(Complex a, const Assembly& as, NormalFormMode mode)
{
    if (std::abs(as.L1) < 1e-14)
        throw Error(ErrorKind::normalization, "L1 vanishes");
    NormalFormData d;
    d.a = a;
    d.b = as.I2 / (2.0 * as.L1);
    d.a_r = a.real();
    d.a_i = a.imag();
    d.b_r = d.b.real();
    d.b_i = d.b.imag();
    d.classification = classify(d.b);
    d.I2 = as.I2;
    d.L1 = as.L1;
    d.L2 = as.L2;
    d.mode = mode;
    return d;
}

} // namespace

NormalFormData coefficient_b(const ReactionSystem& sys, const HopfPoint& hopf, const AdjointEigenSolution& adjoint,
                             const ResolventSolution& psi200, const ResolventSolution& psi110)
{
    const auto as = assemble(sys.with_mu(hopf.mu_hat), hopf, adjoint, psi200, psi110, 0.0);
    return finish_data(coefficient_a(sys, hopf, adjoint), as, NormalFormMode::consistent);
}

NormalFormReport compute_normal_form(const ReactionSystem& sys, const HopfPoint& hopf, const NormalFormOptions& opt)
{
    NormalFormReport r;
    r.hopf = hopf;
    const bool perturbative = opt.mode == NormalFormMode::perturbative;
    const ReactionSystem linear_sys = perturbative ? sys.affine_part() : sys;

    r.adjoint = solve_adjoint(linear_sys, hopf);
    const auto lin = hopf_linearization(linear_sys, hopf);
    const Real omega = hopf.omega_H;
    if (perturbative) {
        r.psi001 = forced_solve(lin, PsiTag::Psi001, 0.0, Vec2c::Zero());
        r.psi200 = forced_solve(lin, PsiTag::Psi200, Complex(0.0, 2.0 * omega), Vec2c::Zero());
        r.psi110 = forced_solve(lin, PsiTag::Psi110, 0.0, Vec2c::Zero());
    } else {
        r.psi001 = solve_resolvent_quadratic(sys, hopf, PsiTag::Psi001);
        r.psi200 = solve_resolvent_quadratic(sys, hopf, PsiTag::Psi200);
        r.psi110 = solve_resolvent_quadratic(sys, hopf, PsiTag::Psi110);
    }

    const Complex a = coefficient_a(linear_sys, hopf, r.adjoint, opt.R11);
    const auto as = assemble(sys.with_mu(hopf.mu_hat), hopf, r.adjoint, r.psi200, r.psi110, opt.l1_cutoff);
    r.data = finish_data(a, as, opt.mode);

    // Post-hoc solvability: <(i omega - L) X, P*> = 0 for X = Psi200, Psi110,
    // and the b and a equations projected on P*.
    const auto& p = lin.params;
    const auto& Ps = r.adjoint.eigfun;
    const Complex iw(0.0, omega);
    Real worst = 0.0;
    for (const auto* psi : {&r.psi200, &r.psi110}) {
        if (psi->zero)
            continue;
        const Complex fp = dot_conj(coupled(p, psi->forcing), Ps.center());
        const Complex xp = inner_product(psi->sol, Ps);
        const Complex sign = psi->tag == PsiTag::Psi200 ? -1.0 : 1.0;
        worst = std::max(worst, relative_defect(fp + sign * iw * xp, std::abs(fp) + omega * std::abs(xp)));
    }
    const Complex PP = inner_product(hopf.eigen.eigfun, Ps);
    worst = std::max(worst, relative_defect(as.I2 - r.data.b * 2.0 * as.L1, std::abs(as.I2) + std::abs(PP)));
    Complex ra = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            ra += opt.R11(i, j) * 2.0 * half_line_product(hopf.eigen.eigfun, j, Ps, i, 0.0);
    worst = std::max(worst, relative_defect(ra - a * PP, std::abs(ra) + std::abs(PP)));
    r.fredholm = worst;
    return r;
}

std::pair<Real, Real> BreathingPrediction::at(Real x, Real t) const
{
    const Real ax = std::abs(x);
    const auto [g1, g2] = pulse_profile.outer(ax);
    const auto [p1, p2] = mode.outer(ax);
    const Complex ph = amplitude * std::exp(Complex(0.0, frequency * t));
    return {g1.real() + 2.0 * (ph * p1).real(), g2.real() + 2.0 * (ph * p2).real()};
}

std::optional<BreathingPrediction> predict_breather(const NormalFormData& nf, const HopfPoint& hopf, Real mu)
{
    if (nf.classification == Criticality::degenerate)
        throw Error(ErrorKind::degeneracy, "b_r vanishes; the cubic normal form does not decide the orbit");
    const Real mu_tilde = mu - hopf.mu_hat;
    const Real r2 = -nf.a_r * mu_tilde / nf.b_r;
    if (r2 < 0.0)
        return std::nullopt;
    BreathingPrediction bp;
    bp.amplitude = std::sqrt(r2);
    bp.frequency = hopf.omega_H;
    bp.stable = nf.b_r < 0.0;
    bp.pulse_profile = hopf.pulse.profile;
    bp.mode = hopf.eigen.eigfun;
    return bp;
}

} // namespace pulsekit
