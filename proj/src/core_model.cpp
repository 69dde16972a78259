#include "pulsekit/core_model.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace pulsekit {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::unsupported_family: return "unsupported_family";
    case ErrorKind::search_failure: return "search_failure";
    case ErrorKind::continuation: return "continuation";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::resonance: return "resonance";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::stepper: return "stepper";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

void SystemParams::validate() const
{
    std::ostringstream msg;
    if (!(mu > 0))
        msg << "mu must be positive (got " << mu << "); ";
    if (!(D > 0))
        msg << "D must be positive (got " << D << "); ";
    if (!(epsilon > 0 && epsilon < 1))
        msg << "epsilon must lie in (0, 1) (got " << epsilon << "); ";
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(b))
        msg << "alpha, beta, b must be finite; ";
    if (!msg.str().empty())
        throw Error(ErrorKind::config, msg.str());
}

Real ImpurityProfile::operator()(Real xi) const
{
    return std::exp(-xi * xi) / std::sqrt(std::numbers::pi);
}

Real ImpurityProfile::density(Real eps, Real x) const
{
    const Real e2 = eps * eps;
    return (*this)(x / e2) / e2;
}

Real ImpurityProfile::reference_mass() const
{
    const int n = 400;
    const Real h = 20.0 / n;
    Real sum = 0.5 * ((*this)(-10.0) + (*this)(10.0));
    for (int k = 1; k < n; ++k)
        sum += (*this)(-10.0 + k * h);
    return sum * h;
}

BivariatePoly::BivariatePoly(std::vector<Monomial> terms)
{
    std::sort(terms.begin(), terms.end(), [](const Monomial& a, const Monomial& b) {
        return a.p != b.p ? a.p < b.p : a.q < b.q;
    });
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k].p < 0 || terms[k].q < 0)
            throw Error(ErrorKind::config, "negative exponent in polynomial term");
        if (k > 0 && terms[k].p == terms[k - 1].p && terms[k].q == terms[k - 1].q) {
            std::ostringstream msg;
            msg << "duplicate monomial (" << terms[k].p << "," << terms[k].q << ")";
            throw Error(ErrorKind::config, msg.str());
        }
    }
    terms_ = std::move(terms);
}

Real BivariatePoly::coeff(int p, int q) const
{
    for (const auto& m : terms_)
        if (m.p == p && m.q == q)
            return m.c;
    return 0.0;
}

int BivariatePoly::degree() const
{
    int d = 0;
    for (const auto& m : terms_)
        if (m.c != 0.0)
            d = std::max(d, m.p + m.q);
    return d;
}

BivariatePoly BivariatePoly::affine_part() const
{
    std::vector<Monomial> out;
    for (const auto& m : terms_)
        if (m.p + m.q <= 1)
            out.push_back(m);
    return BivariatePoly(out);
}

BivariatePoly BivariatePoly::nonlinear_part() const
{
    std::vector<Monomial> out;
    for (const auto& m : terms_)
        if (m.p + m.q >= 2)
            out.push_back(m);
    return BivariatePoly(out);
}

Real eval_poly(const BivariatePoly& G, Real u1, Real u2)
{
    return G(u1, u2);
}

bool ReactionSystem::nonzero_at_origin() const
{
    return G1.coeff(0, 0) != 0.0 || G2.coeff(0, 0) != 0.0;
}

ReactionSystem ReactionSystem::with_mu(Real mu) const
{
    ReactionSystem out = *this;
    out.params.mu = mu;
    return out;
}

ReactionSystem ReactionSystem::affine_part() const
{
    return ReactionSystem{params, G1.affine_part(), G2.affine_part()};
}

Mat2 ReactionSystem::jacobian(Real u1, Real u2) const
{
    Mat2 J;
    J << G1.derivative(1, 0, u1, u2), G1.derivative(0, 1, u1, u2),
        G2.derivative(1, 0, u1, u2), G2.derivative(0, 1, u1, u2);
    return J;
}

Branch branch_for(Real D)
{
    return std::abs(D - 1.0) < resonant_tol ? Branch::resonant : Branch::general;
}

Complex principal_sqrt(Complex z)
{
    if (z.imag() == 0.0 && z.real() <= 0.0) {
        std::ostringstream msg;
        msg << "argument " << z.real() << " lies on the branch cut (-inf, 0]";
        throw Error(ErrorKind::domain, msg.str());
    }
    return std::sqrt(z);
}

namespace {

Complex expm1c(Complex z)
{
    if (std::abs(z) < 1e-5)
        return z * (1.0 + z * (0.5 + z / 6.0));
    return std::exp(z) - 1.0;
}

} // namespace

PiecewiseExpSolution PiecewiseExpSolution::from_center(Complex lambda_shift, Complex v1,
                                                       Complex v2, Real b, Real D,
                                                       Coupling coupling)
{
    PiecewiseExpSolution s;
    s.shift_ = lambda_shift;
    s.b_ = b;
    s.D_ = D;
    s.coupling_ = coupling;
    s.center_ = {v1, v2};
    s.finish();
    const Complex t2 = s.t_ * s.t_;
    if (coupling == Coupling::forward) {
        s.fast_ = v1;
        s.slow_ = s.branch_ == Branch::resonant ? v2 + b * v1 / (4.0 * t2) : v2 - s.K_ * v1;
    } else {
        s.slow_ = v2;
        s.fast_ = s.branch_ == Branch::resonant ? v1 + b * v2 / (4.0 * t2) : v1 - s.K_ * v2;
    }
    return s;
}

PiecewiseExpSolution PiecewiseExpSolution::from_amplitudes(Complex lambda_shift,
                                                           Complex fast_amp,
                                                           Complex slow_amp, Real b,
                                                           Real D, Coupling coupling)
{
    PiecewiseExpSolution s;
    s.shift_ = lambda_shift;
    s.b_ = b;
    s.D_ = D;
    s.coupling_ = coupling;
    s.fast_ = fast_amp;
    s.slow_ = slow_amp;
    s.finish();
    const Complex t2 = s.t_ * s.t_;
    if (coupling == Coupling::forward) {
        s.center_[0] = fast_amp;
        s.center_[1] = s.branch_ == Branch::resonant ? slow_amp - b * fast_amp / (4.0 * t2)
                                                     : slow_amp + s.K_ * fast_amp;
    } else {
        s.center_[1] = slow_amp;
        s.center_[0] = s.branch_ == Branch::resonant ? fast_amp - b * slow_amp / (4.0 * t2)
                                                     : fast_amp + s.K_ * slow_amp;
    }
    return s;
}

void PiecewiseExpSolution::finish()
{
    if (!(D_ > 0))
        throw Error(ErrorKind::domain, "D must be positive");
    t_ = principal_sqrt(shift_);
    s_ = t_ / std::sqrt(D_);
    branch_ = branch_for(D_);
    if (branch_ == Branch::general) {
        const Complex t2 = t_ * t_;
        K_ = coupling_ == Coupling::forward ? b_ / ((D_ - 1.0) * t2)
                                            : b_ / ((1.0 / D_ - 1.0) * t2);
    }
}

std::pair<Complex, Complex> PiecewiseExpSolution::outer(Real x) const
{
    x = std::abs(x);
    const Complex et = std::exp(-t_ * x);
    const Complex es = std::exp(-s_ * x);
    if (coupling_ == Coupling::forward) {
        const Complex u1 = fast_ * et;
        Complex u2;
        if (branch_ == Branch::resonant)
            u2 = slow_ * et + b_ * fast_ / (4.0 * t_ * t_) * (-1.0 - 2.0 * t_ * x) * et;
        else
            u2 = center_[1] * es + K_ * fast_ * es * expm1c(-(t_ - s_) * x);
        return {u1, u2};
    }
    const Complex u2 = slow_ * es;
    Complex u1;
    if (branch_ == Branch::resonant)
        u1 = fast_ * et + b_ * slow_ / (4.0 * t_ * t_) * (-1.0 - 2.0 * t_ * x) * et;
    else
        u1 = center_[0] * et + K_ * slow_ * et * expm1c(-(s_ - t_) * x);
    return {u1, u2};
}

std::vector<ExpTerm> PiecewiseExpSolution::terms(int i) const
{
    const bool driven = (coupling_ == Coupling::forward) ? i == 1 : i == 0;
    const Complex own_rate = (i == 0) ? t_ : s_;
    const Complex amp = (i == 0) ? fast_ : slow_;
    const Complex driver = (i == 0) ? slow_ : fast_;
    if (!driven)
        return {ExpTerm{amp, 0, own_rate}};
    if (branch_ == Branch::resonant) {
        const Complex k = b_ * driver / (4.0 * t_ * t_);
        return {ExpTerm{amp - k, 0, t_}, ExpTerm{-2.0 * t_ * k, 1, t_}};
    }
    const Complex other_rate = (i == 0) ? s_ : t_;
    return {ExpTerm{amp, 0, own_rate}, ExpTerm{K_ * driver, 0, other_rate}};
}

std::pair<Complex, Complex> eval_piecewise(const PiecewiseExpSolution& sol,
                                           const ReactionSystem& sys, Real x)
{
    if (std::abs(x) <= sys.params.epsilon)
        return {sol.center(0), sol.center(1)};
    return sol.outer(x);
}

std::vector<Real> impurity_on_grid(const ImpurityProfile& profile, Real eps,
                                   const std::vector<Real>& grid)
{
    const Real core = 10.0 * eps * eps;
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1]))
            throw Error(ErrorKind::resolution, "grid must be strictly increasing");
    const auto inside = std::count_if(grid.begin(), grid.end(),
                                      [core](Real x) { return std::abs(x) <= core; });
    if (grid.empty() || grid.front() > -core || grid.back() < core || inside < 20) {
        std::ostringstream msg;
        msg << "grid resolves the impurity core [-" << core << ", " << core << "] with "
            << inside << " nodes; at least 20 are required";
        throw Error(ErrorKind::resolution, msg.str());
    }
    std::vector<Real> w(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        w[k] = profile.density(eps, grid[k]);
    Real mass = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k)
        mass += 0.5 * (w[k] + w[k - 1]) * (grid[k] - grid[k - 1]);
    for (auto& v : w)
        v /= mass;
    return w;
}

} // namespace pulsekit
