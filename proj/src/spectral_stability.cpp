#include "pulsekit/spectral_stability.hpp"

#include <algorithm>
#include <numbers>
#include <set>
#include <sstream>

namespace pulsekit {

namespace {

constexpr std::array<std::pair<Family, const char*>, 8> family_names{{
    {Family::linear, "linear"},
    {Family::g15_g21, "G15-G21"},
    {Family::g15_g22, "G15-G22"},
    {Family::g15_g23, "G15-G23"},
    {Family::g13_g24, "G13-G24"},
    {Family::g13_g25, "G13-G25"},
    {Family::g13_g26, "G13-G26"},
    {Family::g13_g22_cubic, "g13-g22-cubic"},
}};

std::set<std::pair<int, int>> support(const BivariatePoly& G)
{
    std::set<std::pair<int, int>> s;
    for (const auto& m : G.terms())
        if (m.c != 0.0)
            s.insert({m.p, m.q});
    return s;
}

bool subset(const std::set<std::pair<int, int>>& a, std::set<std::pair<int, int>> b)
{
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

} // namespace

const char* to_string(Family f)
{
    for (const auto& [fam, name] : family_names)
        if (fam == f)
            return name;
    return "unknown";
}

std::optional<Family> family_from_string(const std::string& s)
{
    for (const auto& [fam, name] : family_names)
        if (s == name)
            return fam;
    return std::nullopt;
}

std::optional<Family> detect_family(const ReactionSystem& sys)
{
    const auto s1 = support(sys.G1);
    const auto s2 = support(sys.G2);
    if (sys.G1.degree() <= 1 && sys.G2.degree() <= 1)
        return Family::linear;
    using S = std::set<std::pair<int, int>>;
    if (s1.count({0, 2}) && subset(s1, S{{0, 0}, {0, 2}})) {
        if (subset(s2, S{{0, 0}}))
            return Family::g15_g21;
        if (s2 == S{{1, 0}})
            return Family::g15_g22;
        if (s2 == S{{0, 1}})
            return Family::g15_g23;
    }
    if (s1.count({0, 1}) && subset(s1, S{{0, 0}, {0, 1}})) {
        if (s2 == S{{2, 0}})
            return Family::g13_g24;
        if (s2 == S{{0, 2}})
            return Family::g13_g25;
        if (s2 == S{{1, 1}})
            return Family::g13_g26;
    }
    if (s1.count({3, 0}) && subset(s1, S{{0, 0}, {0, 1}, {3, 0}}) && subset(s2, S{{0, 0}, {1, 0}}))
        return Family::g13_g22_cubic;
    return std::nullopt;
}

bool fits_family(const ReactionSystem& sys, Family family)
{
    using S = std::set<std::pair<int, int>>;
    const auto s1 = support(sys.G1);
    const auto s2 = support(sys.G2);
    const S g15{{0, 0}, {0, 2}}, g13{{0, 0}, {0, 1}};
    switch (family) {
    case Family::linear:
        return sys.G1.degree() <= 1 && sys.G2.degree() <= 1;
    case Family::g15_g21:
        return subset(s1, g15) && subset(s2, S{{0, 0}});
    case Family::g15_g22:
        return subset(s1, g15) && subset(s2, S{{1, 0}});
    case Family::g15_g23:
        return subset(s1, g15) && subset(s2, S{{0, 1}});
    case Family::g13_g24:
        return subset(s1, g13) && subset(s2, S{{2, 0}});
    case Family::g13_g25:
        return subset(s1, g13) && subset(s2, S{{0, 2}});
    case Family::g13_g26:
        return subset(s1, g13) && subset(s2, S{{1, 1}});
    case Family::g13_g22_cubic:
        return subset(s1, S{{0, 0}, {0, 1}, {3, 0}}) && subset(s2, S{{0, 0}, {1, 0}});
    }
    return false;
}

CoreLinearization linearize(const ReactionSystem& sys, const PinnedPulse& pulse)
{
    CoreLinearization lin;
    lin.params = sys.params;
    lin.params.mu = pulse.mu;
    lin.J = sys.jacobian(pulse.center1(), pulse.center2());
    return lin;
}

Complex scaled_determinant(const CoreLinearization& lin, Complex lambda)
{
    const Complex t = principal_sqrt(lin.params.mu + lambda);
    return t * forward_matrix(lin, t).determinant();
}

SearchRect default_search_rect(Real mu)
{
    return SearchRect{-mu + 1e-6, mu + 10.0, -10.0 * (1.0 + mu), 10.0 * (1.0 + mu)};
}

Complex eigen_determinant(const CoreLinearization& lin, Complex lambda)
{
    const auto& p = lin.params;
    const auto& J = lin.J;
    const Complex t = principal_sqrt(p.mu + lambda);
    const Real dD = std::abs(p.D - 1.0);
    Mat2c M;
    if (dD < resonant_tol) {
        const Complex K = -p.b / (4.0 * t * t);
        M << p.alpha * (J(0, 0) + J(0, 1) * K) - 2.0 * t, p.alpha * J(0, 1),
            p.beta * (J(1, 0) + J(1, 1) * K) - p.b / (2.0 * t), p.beta * J(1, 1) - 2.0 * t;
        return M.determinant();
    }
    if (dD < near_resonant_tol)
        return forward_matrix(lin, t).determinant() / p.D;
    const Complex K = p.b / ((p.D - 1.0) * t * t);
    M << p.alpha * (J(0, 0) + J(0, 1) * K) - 2.0 * t, p.alpha * J(0, 1),
        p.beta / p.D * (J(1, 0) + J(1, 1) * K) - 2.0 * p.b / ((p.D - 1.0) * t),
        p.beta / p.D * J(1, 1) - 2.0 * t / std::sqrt(p.D);
    return M.determinant();
}

Complex eigen_determinant(const ReactionSystem& sys, const PinnedPulse& pulse, Complex lambda)
{
    return eigen_determinant(linearize(sys, pulse), lambda);
}

namespace {

Complex polish_cubic_root(const CubicForm& c, Complex x)
{
    for (int k = 0; k < 3; ++k) {
        const Complex f = c(x);
        const Complex d = c.derivative(x);
        if (std::abs(d) < 1e-300)
            break;
        const Complex nx = x - f / d;
        if (std::abs(c(nx)) >= std::abs(f))
            break;
        x = nx;
    }
    return x;
}

} // namespace

std::array<Complex, 3> shengjin_roots(const CubicForm& c)
{
    if (c.leading == 0.0)
        throw Error(ErrorKind::domain, "cubic with zero leading coefficient");
    const Real a = c.leading, b = c.A, cc = c.B, d = c.E;
    const Real As = b * b - 3.0 * a * cc;
    const Real Bs = b * cc - 9.0 * a * d;
    const Real Cs = cc * cc - 3.0 * b * d;
    const Real delta = Bs * Bs - 4.0 * As * Cs;
    const Real scale = Bs * Bs + 4.0 * std::abs(As * Cs);
    const Real sqrt3 = std::sqrt(3.0);
    std::array<Complex, 3> x;
    bool pair = false;

    if (As == 0.0 && Bs == 0.0) {
        x.fill(Complex(-b / (3.0 * a)));
    } else if (std::abs(delta) <= 1e-12 * scale) {
        // Near a repeated root the radicals cancel; take the exact
        // double-root formula and let Newton recover the split.
        const Real K = Bs / As;
        x = {Complex(-b / a + K), Complex(-K / 2.0), Complex(-K / 2.0)};
        if (delta > 0.0 && x[0].real() != 0.0) {
            x[0] = polish_cubic_root(c, x[0]);
            const Real re = (-b / a - x[0].real()) / 2.0;
            const Real prod = -d / (a * x[0].real());
            const Real im2 = prod - re * re;
            x[1] = Complex(re, std::sqrt(std::max<Real>(im2, 0.0)));
            x[2] = std::conj(x[1]);
            pair = im2 > 0.0;
        }
    } else if (delta > 0.0) {
        const Real Y1 = As * b + 1.5 * a * (-Bs + std::sqrt(delta));
        const Real Y2 = As * b + 1.5 * a * (-Bs - std::sqrt(delta));
        const Real c1 = std::cbrt(Y1), c2 = std::cbrt(Y2);
        x[0] = Complex((-b - (c1 + c2)) / (3.0 * a));
        x[1] = Complex((-2.0 * b + c1 + c2) / (6.0 * a), sqrt3 * (c1 - c2) / (6.0 * a));
        if (x[1].imag() < 0.0)
            x[1] = std::conj(x[1]);
        x[2] = std::conj(x[1]);
        pair = true;
    } else {
        const Real T = std::clamp((2.0 * As * b - 3.0 * a * Bs) / (2.0 * std::pow(As, 1.5)), -1.0, 1.0);
        const Real th = std::acos(T) / 3.0;
        const Real sA = std::sqrt(As);
        x[0] = Complex((-b - 2.0 * sA * std::cos(th)) / (3.0 * a));
        x[1] = Complex((-b + sA * (std::cos(th) + sqrt3 * std::sin(th))) / (3.0 * a));
        x[2] = Complex((-b + sA * (std::cos(th) - sqrt3 * std::sin(th))) / (3.0 * a));
    }

    for (auto& r : x)
        r = polish_cubic_root(c, r);
    if (pair) {
        x[0] = Complex(x[0].real(), 0.0);
        if (x[1].imag() < 0.0)
            x[1] = std::conj(x[1]);
        x[2] = std::conj(x[1]);
    } else {
        for (auto& r : x)
            r = Complex(r.real(), 0.0);
    }
    return x;
}

namespace {

CubicForm family_cubic(Family family, const SystemParams& p, const ReactionSystem& sys,
                       Real C1, Real W)
{
    const Real al = p.alpha, be = p.beta, b = p.b, sD = std::sqrt(p.D);
    const auto g1 = [&](int i, int j) { return sys.G1.coeff(i, j); };
    const auto g2 = [&](int i, int j) { return sys.G2.coeff(i, j); };
    const Real G12 = g1(1, 0), G13 = g1(0, 1), G15 = g1(0, 2);
    const Real G22 = g2(1, 0), G23 = g2(0, 1), G24 = g2(2, 0), G25 = g2(0, 2), G26 = g2(1, 1);
    CubicForm c;
    switch (family) {
    case Family::linear:
        c.leading = 2.0;
        c.A = -(al * G12 + be * G23 / sD);
        c.B = al * be / (2.0 * sD) * (G12 * G23 - G13 * G22);
        c.E = b * al * G13 / (sD + 1.0);
        break;
    case Family::g15_g21:
        c.leading = 1.0;
        c.E = al * b * G15 * W / (1.0 + sD);
        break;
    case Family::g15_g22:
        c.leading = 1.0;
        c.B = -al * be * G15 * G22 / (2.0 * sD) * W;
        c.E = al * b * G15 / (1.0 + sD) * W;
        break;
    case Family::g15_g23:
        c.leading = 2.0 * sD;
        c.A = -be * G23;
        c.E = 2.0 * al * b * sD * G15 * W / (1.0 + sD);
        break;
    case Family::g13_g24:
        c.leading = 2.0 * sD;
        c.B = -al * be * G13 * G24 * C1;
        c.E = al * b * sD * G13 / (sD + 1.0);
        break;
    case Family::g13_g25:
        c.leading = 2.0 * sD / (al * G13);
        c.A = -2.0 * be * G25 * W / (al * G13);
        c.E = b * sD / (sD + 1.0);
        break;
    case Family::g13_g26:
        c.leading = 2.0;
        c.A = -be * G26 * C1 / sD;
        c.B = -al * be * G13 * G26 * W / (2.0 * sD);
        c.E = al * b * G13 / (sD + 1.0);
        break;
    case Family::g13_g22_cubic: {
        const Real nu = g1(3, 0);
        c.leading = 1.0;
        c.A = -1.5 * al * nu * C1 * C1;
        c.B = -al * be * G13 * G22 / (4.0 * sD);
        c.E = al * b * G13 / (2.0 * (sD + 1.0));
        break;
    }
    }
    return c;
}

} // namespace

CubicReduction reduce_to_cubic(const ReactionSystem& sys, const PinnedPulse& pulse, Family family)
{
    CubicReduction red;
    red.family = family;
    red.mu = pulse.mu;
    red.pulse = pulse;
    red.cubic = family_cubic(family, sys.params, sys, pulse.C1, pulse.center2());
    if (red.cubic.leading == 0.0 || !std::isfinite(red.cubic.leading))
        throw Error(ErrorKind::unsupported_family, "family cubic has a vanishing leading coefficient");
    red.t_roots = shengjin_roots(red.cubic);
    for (const auto& t : red.t_roots)
        if (t.real() > 0.0)
            red.lambda_roots.push_back(t * t - pulse.mu);
    return red;
}

CubicReduction reduce_to_cubic(const ReactionSystem& sys, const PinnedPulse& pulse)
{
    const auto fam = detect_family(sys);
    if (!fam)
        throw Error(ErrorKind::unsupported_family,
                    "system matches none of the closed-form families; use the determinant search");
    return reduce_to_cubic(sys, pulse, *fam);
}

std::optional<Complex> polish_eigenvalue(const CoreLinearization& lin, Complex lambda0, Real tol,
                                         int max_iter)
{
    const Real mu = lin.params.mu;
    const auto g = [&](Complex t) { return t * forward_matrix(lin, t).determinant(); };
    Complex t;
    try {
        t = principal_sqrt(mu + lambda0);
    } catch (const Error&) {
        return std::nullopt;
    }
    for (int it = 0; it < max_iter; ++it) {
        const Real h = 1e-6 * (1.0 + std::abs(t));
        const Complex f = g(t);
        const Complex df = (g(t + h) - g(t - h)) / (2.0 * h);
        if (std::abs(df) == 0.0 || !std::isfinite(std::abs(f)))
            return std::nullopt;
        const Complex step = f / df;
        t -= step;
        if (std::abs(step) <= tol * (1.0 + std::abs(t))) {
            t -= g(t) / df;
            if (!(t.real() > 0.0))
                return std::nullopt;
            return t * t - mu;
        }
    }
    return std::nullopt;
}

EigenSolution eigen_solution_at(const CoreLinearization& lin, Complex lambda)
{
    const auto& p = lin.params;
    const Complex t = principal_sqrt(p.mu + lambda);
    const Mat2c M = forward_matrix(lin, t);
    Vec2c va(-M(0, 1), M(0, 0));
    Vec2c vb(M(1, 1), -M(1, 0));
    Vec2c v = va.norm() >= vb.norm() ? va : vb;
    if (v.norm() == 0.0)
        v = Vec2c(1.0, 0.0);
    auto sol = PiecewiseExpSolution::from_center(p.mu + lambda, v(0), v(1), p.b, p.D,
                                                 Coupling::forward);
    const Complex big = std::abs(sol.fast_amp()) >= std::abs(sol.slow_amp()) ? sol.fast_amp()
                                                                             : sol.slow_amp();
    const Complex f = 1.0 / big;
    sol = PiecewiseExpSolution::from_center(p.mu + lambda, f * v(0), f * v(1), p.b, p.D,
                                            Coupling::forward);
    EigenSolution e;
    e.lambda = lambda;
    e.C3 = sol.fast_amp();
    e.C4 = sol.slow_amp();
    e.eigfun = sol;
    e.det_abs = std::abs(eigen_determinant(lin, lambda));
    return e;
}

namespace {

struct Winding {
    bool ok = true;
    Real turns = 0.0;
};

class ZeroSearch {
public:
    ZeroSearch(const CoreLinearization& lin, const EigenSearchOptions& opt) : lin_(lin), opt_(opt) {}

    std::optional<int> count(const SearchRect& r)
    {
        const std::array<Complex, 4> corners{Complex(r.re_min, r.im_min), Complex(r.re_max, r.im_min),
                                             Complex(r.re_max, r.im_max), Complex(r.re_min, r.im_max)};
        Winding w;
        for (int e = 0; e < 4 && w.ok; ++e)
            edge(corners[e], corners[(e + 1) % 4], w);
        if (!w.ok)
            return std::nullopt;
        const Real n = w.turns / (2.0 * std::numbers::pi);
        const Real rn = std::round(n);
        if (std::abs(n - rn) > 0.2 || rn < 0)
            return std::nullopt;
        return static_cast<int>(rn);
    }

    void locate(const SearchRect& r, int n, int depth, std::vector<Complex>& out)
    {
        if (n == 0)
            return;
        const Complex c(0.5 * (r.re_min + r.re_max), 0.5 * (r.im_min + r.im_max));
        const Real w = r.re_max - r.re_min, h = r.im_max - r.im_min;
        if (n == 1) {
            if (auto z = polish_eigenvalue(lin_, c, opt_.newton_tol)) {
                const Real slack = 1e-9 * std::max<Real>(1.0, std::max(w, h));
                if (z->real() >= r.re_min - slack && z->real() <= r.re_max + slack &&
                    z->imag() >= r.im_min - slack && z->imag() <= r.im_max + slack) {
                    out.push_back(*z);
                    return;
                }
            }
        }
        if (depth >= opt_.max_depth || std::max(w, h) < 1e-11 * (1.0 + std::abs(c))) {
            auto z = polish_eigenvalue(lin_, c, opt_.newton_tol).value_or(c);
            for (int k = 0; k < n; ++k)
                out.push_back(z);
            return;
        }
        static constexpr std::array<Real, 5> fractions{0.5, 0.5173, 0.4791, 0.5437, 0.4519};
        for (Real f : fractions) {
            SearchRect a = r, b = r;
            if (w >= h) {
                const Real x = r.re_min + f * w;
                a.re_max = x;
                b.re_min = x;
            } else {
                const Real y = r.im_min + f * h;
                // real zeros of a real operator would sit on this edge
                if (std::abs(y) <= 1e-9 * h)
                    continue;
                a.im_max = y;
                b.im_min = y;
            }
            const auto na = count(a);
            const auto nb = count(b);
            if (!na || !nb || *na + *nb != n)
                continue;
            locate(a, *na, depth + 1, out);
            locate(b, *nb, depth + 1, out);
            return;
        }
        throw Error(ErrorKind::search_failure, "zero count could not be split consistently");
    }

private:
    Complex F(Complex z) { return scaled_determinant(lin_, z); }

    void edge(Complex z0, Complex z1, Winding& w)
    {
        const int n = opt_.edge_samples;
        Complex za = z0;
        Complex fa = F(za);
        if (!good(fa)) {
            w.ok = false;
            return;
        }
        for (int k = 1; k <= n && w.ok; ++k) {
            const Complex zb = z0 + (z1 - z0) * (Real(k) / n);
            const Complex fb = F(zb);
            if (!good(fb)) {
                w.ok = false;
                return;
            }
            segment(za, fa, zb, fb, 0, w);
            za = zb;
            fa = fb;
        }
    }

    void segment(Complex za, Complex fa, Complex zb, Complex fb, int depth, Winding& w)
    {
        const Real d = std::arg(fb / fa);
        const Real ratio = std::abs(fb) / std::abs(fa);
        if ((std::abs(d) < 0.25 && ratio < 4.0 && ratio > 0.25) || depth > 50) {
            if (depth > 50 && std::abs(d) > 1.0)
                w.ok = false;
            w.turns += d;
            return;
        }
        const Complex zm = 0.5 * (za + zb);
        const Complex fm = F(zm);
        if (!good(fm)) {
            w.ok = false;
            return;
        }
        segment(za, fa, zm, fm, depth + 1, w);
        if (w.ok)
            segment(zm, fm, zb, fb, depth + 1, w);
    }

    static bool good(Complex f) { return std::isfinite(f.real()) && std::isfinite(f.imag()) && f != 0.0; }

    const CoreLinearization& lin_;
    EigenSearchOptions opt_;
};

void check_rect(const SearchRect& r, Real mu)
{
    if (!(r.re_max > r.re_min && r.im_max > r.im_min))
        throw Error(ErrorKind::domain, "search rectangle is empty");
    if (r.re_min < -mu + 1e-6 - 1e-15 && r.im_min <= 1e-6 && r.im_max >= -1e-6)
        throw Error(ErrorKind::domain, "search rectangle touches the essential spectrum (-inf, -mu]");
}

} // namespace

int count_zeros(const CoreLinearization& lin, const SearchRect& rect)
{
    check_rect(rect, lin.params.mu);
    ZeroSearch zs(lin, {});
    auto n = zs.count(rect);
    if (!n)
        throw Error(ErrorKind::search_failure, "winding number on the rectangle boundary is not an integer");
    return *n;
}

std::vector<EigenSolution> find_eigenvalues(const CoreLinearization& lin, const SearchRect& rect,
                                            const EigenSearchOptions& opt)
{
    check_rect(rect, lin.params.mu);
    ZeroSearch zs(lin, opt);
    auto n = zs.count(rect);
    if (!n)
        throw Error(ErrorKind::search_failure,
                    "winding number on the rectangle boundary is not an integer; refine the rectangle");
    std::vector<Complex> zeros;
    zs.locate(rect, *n, 0, zeros);
    if (static_cast<int>(zeros.size()) != *n)
        throw Error(ErrorKind::search_failure, "located zeros disagree with the winding count");

    // Real operator: pair up conjugates exactly.
    const Real mu = lin.params.mu;
    for (auto& z : zeros)
        if (std::abs(z.imag()) <= 1e-12 * (1.0 + std::abs(z)))
            z = Complex(z.real(), 0.0);
    std::vector<bool> used(zeros.size(), false);
    for (std::size_t i = 0; i < zeros.size(); ++i) {
        if (used[i] || zeros[i].imag() <= 0.0)
            continue;
        for (std::size_t j = 0; j < zeros.size(); ++j) {
            if (j == i || used[j] || zeros[j].imag() >= 0.0)
                continue;
            if (std::abs(std::conj(zeros[i]) - zeros[j]) <= 1e-8 * (1.0 + std::abs(zeros[i]))) {
                const Complex avg = 0.5 * (zeros[i] + std::conj(zeros[j]));
                zeros[i] = avg;
                zeros[j] = std::conj(avg);
                used[i] = used[j] = true;
                break;
            }
        }
    }
    std::sort(zeros.begin(), zeros.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<EigenSolution> out;
    for (const auto& z : zeros) {
        if (z.imag() == 0.0 && z.real() <= -mu + 1e-6)
            continue;
        out.push_back(eigen_solution_at(lin, z));
    }
    return out;
}

std::vector<EigenSolution> find_eigenvalues(const ReactionSystem& sys, const PinnedPulse& pulse,
                                            const SearchRect& rect, const EigenSearchOptions& opt)
{
    return find_eigenvalues(linearize(sys, pulse), rect, opt);
}

StabilityVerdict classify_stability(const ReactionSystem& sys, const PinnedPulse& pulse)
{
    StabilityVerdict v;
    v.essential_spectrum_edge = -pulse.mu;
    v.eigenvalues = find_eigenvalues(sys, pulse, default_search_rect(pulse.mu));
    for (const auto& e : v.eigenvalues) {
        if (!v.leading_eigenvalue || e.lambda.real() >= v.leading_eigenvalue->real())
            v.leading_eigenvalue = e.lambda;
    }
    v.stable = !v.leading_eigenvalue || v.leading_eigenvalue->real() < 0.0;
    return v;
}

} // namespace pulsekit
