#include "pulsekit/pde_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace pulsekit {

const char* to_string(Boundary b)
{
    return b == Boundary::dirichlet ? "dirichlet" : "neumann";
}

const char* to_string(InitialState s)
{
    switch (s) {
    case InitialState::pulse: return "pulse";
    case InitialState::pulse_kick: return "pulse+kick";
    case InitialState::pulse_noise: return "pulse+noise";
    case InitialState::zero: return "zero";
    }
    return "?";
}

const char* to_string(Stepper s)
{
    return s == Stepper::imex ? "imex" : "implicit";
}

const char* to_string(Mesh m)
{
    return m == Mesh::uniform ? "uniform" : "graded";
}

const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::decay: return "decay";
    case Outcome::sustained: return "sustained";
    case Outcome::growing: return "growing";
    case Outcome::blow_up: return "blow-up";
    case Outcome::indeterminate: return "indeterminate";
    }
    return "?";
}

std::vector<std::string> SimConfig::validate(const SystemParams& p) const
{
    p.validate();
    const auto bad = [](const std::string& m) { return Error(ErrorKind::config, m); };
    if (!(dt > 0.0) || !(t_end > 0.0) || !(sample_interval > 0.0))
        throw bad("dt, t_end and sample_interval must be positive");
    if (!(domain_half_width > 0.0))
        throw bad("domain_half_width must be positive");
    const Real h = core_dx(p);
    const Real e2 = p.epsilon * p.epsilon;
    if (!(h > 0.0) || 6.0 * e2 / h < 20.0) {
        std::ostringstream m;
        m << "dx = " << h << " puts fewer than 20 nodes across [-3 eps^2, 3 eps^2]";
        throw bad(m.str());
    }
    if (mesh == Mesh::graded && (graded_ratio < 1.0 || graded_dx_max < h || graded_core < 3.0 * e2))
        throw bad("graded mesh needs ratio >= 1, dx_max >= dx and a core covering 3 eps^2");
    std::vector<std::string> warnings;
    const Real want = 20.0 / std::sqrt(p.mu);
    if (domain_half_width < want) {
        std::ostringstream m;
        m << "domain_half_width " << domain_half_width << " is below 20/sqrt(mu) = " << want;
        warnings.push_back(m.str());
    }
    return warnings;
}

std::vector<Real> make_uniform_grid(Real half_width, Real dx)
{
    const long n = std::max<long>(1, std::lround(half_width / dx));
    std::vector<Real> x(2 * n + 1);
    for (long k = -n; k <= n; ++k)
        x[k + n] = half_width * Real(k) / Real(n);
    return x;
}

std::vector<Real> make_graded_grid(Real half_width, Real dx, Real core, Real ratio, Real dx_max)
{
    if (half_width <= core)
        return make_uniform_grid(half_width, dx);
    const long nc = std::max<long>(1, std::lround(core / dx));
    std::vector<Real> right;
    for (long k = 0; k <= nc; ++k)
        right.push_back(core * Real(k) / Real(nc));
    Real h = core / Real(nc);
    while (right.back() < half_width) {
        h = std::min(h * ratio, dx_max);
        right.push_back(right.back() + h);
    }
    // Compress the coarse part so the edge lands on half_width.
    const Real end = right.back();
    const std::size_t n = right.size();
    for (std::size_t k = nc + 1; k < n; ++k)
        right[k] = core + (right[k] - core) * (half_width - core) / (end - core);
    std::vector<Real> x;
    x.reserve(2 * n - 1);
    for (std::size_t k = n; k-- > 1;)
        x.push_back(-right[k]);
    for (Real v : right)
        x.push_back(v);
    return x;
}

std::vector<Real> make_grid(const SimConfig& cfg, const SystemParams& p)
{
    const Real h = cfg.core_dx(p);
    if (cfg.mesh == Mesh::graded)
        return make_graded_grid(cfg.domain_half_width, h, cfg.graded_core, cfg.graded_ratio, cfg.graded_dx_max);
    return make_uniform_grid(cfg.domain_half_width, h);
}

namespace {

using State = std::vector<Vec2>;

/// Block tridiagonal matrix with 2x2 blocks, factored by block Thomas.
/// Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1].
class BlockTridiag {
public:
    explicit BlockTridiag(std::size_t n) : lower(n, Mat2::Zero()), diag(n, Mat2::Zero()), upper(n, Mat2::Zero()) {}

    std::vector<Mat2> lower, diag, upper;

    std::size_t size() const { return diag.size(); }

    void apply(const State& x, State& y) const
    {
        const std::size_t n = size();
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 s = diag[i] * x[i];
            if (i > 0)
                s += lower[i] * x[i - 1];
            if (i + 1 < n)
                s += upper[i] * x[i + 1];
            y[i] = s;
        }
    }

    void factor()
    {
        const std::size_t n = size();
        inv_.assign(n, Mat2::Zero());
        w_.assign(n, Mat2::Zero());
        Mat2 piv = diag[0];
        for (std::size_t i = 0;; ++i) {
            const Real det = piv.determinant();
            if (!std::isfinite(det) || det == 0.0)
                throw Error(ErrorKind::stepper, "singular block in the implicit solve");
            inv_[i] = piv.inverse();
            if (i + 1 == n)
                break;
            w_[i + 1] = lower[i + 1] * inv_[i];
            piv = diag[i + 1] - w_[i + 1] * upper[i];
        }
    }

    void solve(State& r) const
    {
        const std::size_t n = size();
        for (std::size_t i = 1; i < n; ++i)
            r[i] -= w_[i] * r[i - 1];
        r[n - 1] = inv_[n - 1] * r[n - 1];
        for (std::size_t i = n - 1; i-- > 0;)
            r[i] = inv_[i] * (r[i] - upper[i] * r[i + 1]);
    }

private:
    std::vector<Mat2> inv_, w_;
};

/// Spatial discretization of the right-hand side.
class Discretization {
public:
    Discretization(const ReactionSystem& sys, const SimConfig& cfg)
        : sys_(sys), p_(sys.params), x_(make_grid(cfg, sys.params)), dirichlet_(cfg.boundary == Boundary::dirichlet)
    {
        const std::size_t n = x_.size();
        imp_ = impurity_on_grid(ImpurityProfile{}, p_.epsilon, x_);
        lo_.assign(n, 0.0);
        hi_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 0) {
                const Real h = x_[1] - x_[0];
                hi_[i] = 2.0 / (h * h);
            } else if (i + 1 == n) {
                const Real h = x_[i] - x_[i - 1];
                lo_[i] = 2.0 / (h * h);
            } else {
                const Real hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
                lo_[i] = 2.0 / (hl * (hl + hr));
                hi_[i] = 2.0 / (hr * (hl + hr));
            }
        }
        G1nl_ = sys.G1.nonlinear_part();
        G2nl_ = sys.G2.nonlinear_part();
        const auto aff = sys.affine_part();
        A_ = Mat2::Zero();
        A_ << aff.G1.coeff(1, 0), aff.G1.coeff(0, 1), aff.G2.coeff(1, 0), aff.G2.coeff(0, 1);
        c_ = Vec2(aff.G1.coeff(0, 0), aff.G2.coeff(0, 0));
        center_ = static_cast<std::size_t>(
            std::min_element(x_.begin(), x_.end(), [](Real a, Real b) { return std::abs(a) < std::abs(b); }) -
            x_.begin());
    }

    const std::vector<Real>& x() const { return x_; }
    std::size_t size() const { return x_.size(); }
    std::size_t center() const { return center_; }
    bool pinned(std::size_t i) const { return dirichlet_ && (i == 0 || i + 1 == size()); }
    bool has_nonlinear() const { return !G1nl_.empty() || !G2nl_.empty(); }

    /// Affine operator A (linear part) as block tridiagonal.
    BlockTridiag affine_operator() const
    {
        const std::size_t n = size();
        BlockTridiag M(n);
        const Mat2 Dm = Vec2(1.0, p_.D).asDiagonal();
        const Mat2 coup = Vec2(p_.alpha, p_.beta).asDiagonal();
        Mat2 base;
        base << -p_.mu, 0.0, -p_.b, -p_.mu;
        for (std::size_t i = 0; i < n; ++i) {
            if (pinned(i))
                continue;
            M.lower[i] = lo_[i] * Dm;
            M.upper[i] = hi_[i] * Dm;
            M.diag[i] = -(lo_[i] + hi_[i]) * Dm + base + imp_[i] * coup * A_;
        }
        return M;
    }

    /// Constant source I(x) (alpha G1(0,0), beta G2(0,0)).
    Vec2 constant(std::size_t i) const
    {
        if (pinned(i))
            return Vec2::Zero();
        return imp_[i] * Vec2(p_.alpha * c_(0), p_.beta * c_(1));
    }

    Vec2 nonlinear(std::size_t i, const Vec2& u) const
    {
        if (pinned(i) || imp_[i] == 0.0)
            return Vec2::Zero();
        return imp_[i] * Vec2(p_.alpha * G1nl_(u(0), u(1)), p_.beta * G2nl_(u(0), u(1)));
    }

    Mat2 nonlinear_jacobian(std::size_t i, const Vec2& u) const
    {
        if (pinned(i) || imp_[i] == 0.0)
            return Mat2::Zero();
        Mat2 J;
        J << G1nl_.derivative(1, 0, u(0), u(1)), G1nl_.derivative(0, 1, u(0), u(1)),
            G2nl_.derivative(1, 0, u(0), u(1)), G2nl_.derivative(0, 1, u(0), u(1));
        return imp_[i] * Vec2(p_.alpha, p_.beta).asDiagonal() * J;
    }

    /// Full right-hand side F(u) = A u + c + N(u).
    void rhs(const BlockTridiag& A, const State& u, State& out) const
    {
        A.apply(u, out);
        for (std::size_t i = 0; i < size(); ++i)
            out[i] += constant(i) + nonlinear(i, u[i]);
    }

    /// Largest spectral radius of the explicit Jacobian blocks.
    Real explicit_stiffness(const State& u) const
    {
        Real s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            if (imp_[i] == 0.0)
                continue;
            const Mat2 J = nonlinear_jacobian(i, u[i]);
            s = std::max(s, J.eigenvalues().cwiseAbs().maxCoeff());
        }
        return s;
    }

    const std::vector<Real>& impurity() const { return imp_; }

private:
    const ReactionSystem& sys_;
    SystemParams p_;
    std::vector<Real> x_;
    bool dirichlet_;
    std::vector<Real> imp_, lo_, hi_;
    BivariatePoly G1nl_, G2nl_;
    Mat2 A_;
    Vec2 c_;
    std::size_t center_ = 0;
};

BlockTridiag shifted(const BlockTridiag& A, Real scale, Real identity)
{
    BlockTridiag M = A;
    for (std::size_t i = 0; i < M.size(); ++i) {
        M.lower[i] *= scale;
        M.upper[i] *= scale;
        M.diag[i] = scale * M.diag[i] + identity * Mat2::Identity();
    }
    return M;
}

Real sup_norm(const State& u)
{
    Real s = 0.0;
    for (const auto& v : u)
        s = std::max(s, v.cwiseAbs().maxCoeff());
    return s;
}

State steady_state(const Discretization& disc, const BlockTridiag& A, State u)
{
    const std::size_t n = disc.size();
    State F(n);
    for (int it = 0; it < 60; ++it) {
        disc.rhs(A, u, F);
        BlockTridiag J = A;
        for (std::size_t i = 0; i < n; ++i) {
            J.diag[i] += disc.nonlinear_jacobian(i, u[i]);
            if (disc.pinned(i))
                J.diag[i] = Mat2::Identity();
        }
        for (std::size_t i = 0; i < n; ++i)
            if (disc.pinned(i))
                F[i] = u[i];
        J.factor();
        J.solve(F);
        Real step = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] -= F[i];
            step = std::max(step, F[i].cwiseAbs().maxCoeff());
        }
        if (!std::isfinite(step))
            break;
        if (step <= 1e-11 * (1.0 + sup_norm(u)))
            return u;
    }
    throw Error(ErrorKind::stepper, "Newton for the discrete steady state did not converge");
}

PinnedPulse pick_pulse(const ReactionSystem& sys, const SimConfig& cfg)
{
    return cfg.pulse_seed ? select_pulse(sys, cfg.pulse_seed->first, cfg.pulse_seed->second) : unique_pulse(sys);
}

State sample_profile(const PiecewiseExpSolution& sol, const std::vector<Real>& x, bool real_part)
{
    State u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto [a, b] = sol.outer(std::abs(x[i]));
        u[i] = real_part ? Vec2(a.real(), b.real()) : Vec2(a.imag(), b.imag());
    }
    return u;
}

/// Perturbation of relative size cfg.kick.
State make_kick(const ReactionSystem& sys, const SimConfig& cfg, const PinnedPulse& pulse, const State& base,
                const Discretization& disc)
{
    const auto& x = disc.x();
    const std::size_t n = x.size();
    State d(n, Vec2::Zero());
    if (cfg.initial == InitialState::pulse_kick) {
        const auto verdict = classify_stability(sys, pulse);
        if (verdict.leading_eigenvalue) {
            const auto lead = std::find_if(verdict.eigenvalues.begin(), verdict.eigenvalues.end(),
                                           [&](const auto& e) { return e.lambda == *verdict.leading_eigenvalue; });
            d = sample_profile(lead->eigfun, x, true);
        } else {
            d = base;
        }
    } else if (cfg.initial == InitialState::pulse_noise) {
        std::mt19937_64 rng(cfg.noise_seed);
        std::uniform_real_distribution<Real> U(-1.0, 1.0);
        const std::size_t c = disc.center();
        for (std::size_t k = 0; c + k < n && k <= c; ++k) {
            const Vec2 v(U(rng), U(rng));
            d[c + k] = v;
            d[c - k] = v;
        }
    }
    const Real dn = sup_norm(d);
    if (dn > 0.0) {
        const Real f = cfg.kick * sup_norm(base) / dn;
        for (auto& v : d)
            v *= f;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (disc.pinned(i))
            d[i].setZero();
    return d;
}

/// Running maximum of |u1 - base| over a trailing window.
void fill_envelope(std::vector<CenterSample>& s, Real base, Real window)
{
    std::size_t lo = 0;
    std::vector<std::size_t> dq;
    std::size_t head = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const Real v = std::abs(s[k].u1 - base);
        while (dq.size() > head && std::abs(s[dq.back()].u1 - base) <= v)
            dq.pop_back();
        dq.push_back(k);
        while (s[lo].t < s[k].t - window - 1e-12)
            ++lo;
        while (dq[head] < lo)
            ++head;
        s[k].envelope = std::abs(s[dq[head]].u1 - base);
    }
}

void classify(SimDiagnostics& d)
{
    if (d.outcome == Outcome::blow_up)
        return;
    const auto& s = d.series;
    if (s.size() < 4) {
        d.outcome = Outcome::indeterminate;
        return;
    }
    const Real end = s.back().envelope;
    if (end < 1e-6 * d.kick_norm) {
        d.outcome = Outcome::decay;
        return;
    }
    const Real t3 = s.front().t + 0.75 * (s.back().t - s.front().t);
    const auto it = std::lower_bound(s.begin(), s.end(), t3, [](const auto& c, Real t) { return c.t < t; });
    const Real start = it->envelope;
    d.drift = start > 0.0 ? (end - start) / start : 0.0;
    if (std::abs(d.drift) < 0.01)
        d.outcome = Outcome::sustained;
    else if (d.drift > 0.01)
        d.outcome = Outcome::growing;
    else
        d.outcome = Outcome::indeterminate;
}

} // namespace

SimDiagnostics run_simulation(const ReactionSystem& sys, const SimConfig& cfg)
{
    SimDiagnostics diag;
    diag.warnings = cfg.validate(sys.params);
    const Discretization disc(sys, cfg);
    const auto& x = disc.x();
    const std::size_t n = x.size();
    const BlockTridiag A = disc.affine_operator();

    // Base state and initial perturbation.
    State base(n, Vec2::Zero());
    State pert(n, Vec2::Zero());
    if (cfg.initial != InitialState::zero || cfg.linearized) {
        const PinnedPulse pulse = pick_pulse(sys, cfg);
        base = steady_state(disc, A, sample_profile(pulse.profile, x, true));
        pert = make_kick(sys, cfg, pulse, base, disc);
    }
    diag.kick_norm = sup_norm(pert);

    const std::size_t c = disc.center();
    State u(n);
    if (cfg.linearized) {
        u = pert;
        diag.base_u1 = 0.0;
        diag.base_u2 = 0.0;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            u[i] = base[i] + pert[i];
        if (cfg.initial == InitialState::zero)
            u.assign(n, Vec2::Zero());
        diag.base_u1 = base[c](0);
        diag.base_u2 = base[c](1);
    }

    // Frozen Jacobian for the linearized mode.
    BlockTridiag L = A;
    if (cfg.linearized)
        for (std::size_t i = 0; i < n; ++i)
            L.diag[i] += disc.nonlinear_jacobian(i, base[i]);

    Real dt = cfg.dt;
    Real t = 0.0;
    State rhs(n), Nnow(n), Nold(n), tmp(n);
    bool have_old = false;

    BlockTridiag lhs = shifted(cfg.linearized ? L : A, -0.5 * dt, 1.0);
    BlockTridiag rhs_op = shifted(cfg.linearized ? L : A, 0.5 * dt, 1.0);
    lhs.factor();

    const auto refactor = [&] {
        lhs = shifted(cfg.linearized ? L : A, -0.5 * dt, 1.0);
        rhs_op = shifted(cfg.linearized ? L : A, 0.5 * dt, 1.0);
        lhs.factor();
        have_old = false;
    };
    const auto explicit_ok = [&](const State& s) {
        return cfg.linearized || cfg.stepper == Stepper::implicit || dt * disc.explicit_stiffness(s) <= 1.0;
    };
    while (!explicit_ok(u)) {
        dt *= 0.5;
        if (dt < cfg.dt_min)
            throw Error(ErrorKind::stepper, "explicit stability bound needs dt below dt_min at t = 0");
        refactor();
    }

    Real next_sample = 0.0;
    const auto record = [&] {
        diag.series.push_back({t, u[c](0), u[c](1), 0.0});
        next_sample += cfg.sample_interval;
    };
    record();
    diag.max_norm = sup_norm(u);

    long step = 0;
    while (t < cfg.t_end - 1e-12) {
        const Real h = std::min(dt, cfg.t_end - t);
        if (h < dt - 1e-14) {
            dt = h;
            refactor();
        }
        rhs_op.apply(u, rhs);
        if (cfg.linearized) {
            lhs.solve(rhs);
            u.swap(rhs);
        } else if (cfg.stepper == Stepper::imex) {
            for (std::size_t i = 0; i < n; ++i)
                Nnow[i] = disc.constant(i) + disc.nonlinear(i, u[i]);
            for (std::size_t i = 0; i < n; ++i)
                rhs[i] += dt * (have_old ? 1.5 * Nnow[i] - 0.5 * Nold[i] : Nnow[i]);
            lhs.solve(rhs);
            Nold.swap(Nnow);
            have_old = true;
            u.swap(rhs);
        } else {
            // Crank-Nicolson on everything, Newton from the previous state.
            for (std::size_t i = 0; i < n; ++i)
                rhs[i] += 0.5 * dt * (2.0 * disc.constant(i) + disc.nonlinear(i, u[i]));
            State v = u;
            bool converged = false;
            for (int it = 0; it < 20 && !converged; ++it) {
                BlockTridiag J = lhs;
                A.apply(v, tmp);
                Real fmax = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    J.diag[i] -= 0.5 * dt * disc.nonlinear_jacobian(i, v[i]);
                    tmp[i] = v[i] - 0.5 * dt * (tmp[i] + disc.nonlinear(i, v[i])) - rhs[i];
                    fmax = std::max(fmax, tmp[i].cwiseAbs().maxCoeff());
                }
                J.factor();
                J.solve(tmp);
                Real smax = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    v[i] -= tmp[i];
                    smax = std::max(smax, tmp[i].cwiseAbs().maxCoeff());
                }
                converged = smax <= 1e-12 * (1.0 + sup_norm(v));
                if (!std::isfinite(smax))
                    break;
            }
            if (!converged) {
                dt *= 0.5;
                if (dt < cfg.dt_min) {
                    std::ostringstream m;
                    m << "implicit step failed below dt_min; last stable time " << t;
                    throw Error(ErrorKind::stepper, m.str());
                }
                refactor();
                continue;
            }
            u.swap(v);
        }
        t += dt;
        ++step;

        const Real norm = sup_norm(u);
        diag.max_norm = std::max(diag.max_norm, std::isfinite(norm) ? norm : 1e308);
        if (!std::isfinite(norm) || norm > 1e6) {
            diag.outcome = Outcome::blow_up;
            record();
            break;
        }
        if (t >= next_sample - 1e-9)
            record();
        if (step % 50 == 0 && !explicit_ok(u)) {
            dt *= 0.5;
            if (dt < cfg.dt_min) {
                std::ostringstream m;
                m << "explicit stability bound needs dt below dt_min; last stable time " << t;
                throw Error(ErrorKind::stepper, m.str());
            }
            refactor();
        }
    }

    diag.final_time = t;
    diag.dt = dt;
    fill_envelope(diag.series, diag.base_u1, cfg.envelope_window);
    classify(diag);
    diag.estimated_period = measure_period(diag.series);
    diag.x = x;
    diag.u1.resize(n);
    diag.u2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        diag.u1[i] = u[i](0);
        diag.u2[i] = u[i](1);
    }
    return diag;
}

std::optional<Real> measure_period(const std::vector<CenterSample>& series)
{
    if (series.size() < 8)
        return std::nullopt;
    const Real t0 = series.front().t + 0.2 * (series.back().t - series.front().t);
    std::vector<CenterSample> s;
    for (const auto& c : series)
        if (c.t >= t0)
            s.push_back(c);
    if (s.size() < 3)
        return std::nullopt;
    Real mean = 0.0;
    for (const auto& c : s)
        mean += c.u1;
    mean /= Real(s.size());
    Real amp = 0.0;
    for (const auto& c : s)
        amp = std::max(amp, std::abs(c.u1 - mean));
    if (amp <= 1e-12 * (1.0 + std::abs(mean)))
        return std::nullopt;

    // Parabolic refinement of each sampled extremum.
    std::vector<Real> maxima, minima;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const Real a = s[k - 1].u1, b = s[k].u1, c = s[k + 1].u1;
        const bool is_max = b > a && b >= c && b > mean;
        const bool is_min = b < a && b <= c && b < mean;
        if (!is_max && !is_min)
            continue;
        const Real den = a - 2.0 * b + c;
        const Real h = s[k + 1].t - s[k].t;
        const Real shift = den != 0.0 ? 0.5 * (a - c) / den * h : 0.0;
        (is_max ? maxima : minima).push_back(s[k].t + shift);
    }
    if (maxima.size() + minima.size() < 6)
        return std::nullopt;
    const auto spacing = [](const std::vector<Real>& v) -> std::optional<Real> {
        if (v.size() < 2)
            return std::nullopt;
        return (v.back() - v.front()) / Real(v.size() - 1);
    };
    const auto pm = spacing(maxima), pn = spacing(minima);
    if (pm && pn)
        return 0.5 * (*pm + *pn);
    return pm ? pm : pn;
}

std::optional<Real> estimate_growth_rate(const SimDiagnostics& d)
{
    const auto& s = d.series;
    if (s.size() < 4)
        return std::nullopt;
    const Real t0 = s.front().t + 0.5 * (s.back().t - s.front().t);
    Real st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    int m = 0;
    for (const auto& c : s) {
        if (c.t < t0 || !(c.envelope > 0.0))
            continue;
        const Real y = std::log(c.envelope);
        st += c.t;
        sy += y;
        stt += c.t * c.t;
        sty += c.t * y;
        ++m;
    }
    if (m < 3)
        return std::nullopt;
    const Real den = m * stt - st * st;
    if (den == 0.0)
        return std::nullopt;
    return (m * sty - st * sy) / den;
}

Real stationarity_residual(const ReactionSystem& sys, const PinnedPulse& pulse, const SimConfig& cfg)
{
    cfg.validate(sys.params);
    const Discretization disc(sys, cfg);
    const auto& x = disc.x();
    const std::size_t n = x.size();
    const BlockTridiag A = disc.affine_operator();
    const State u = sample_profile(pulse.profile, x, true);
    State F(n);
    disc.rhs(A, u, F);
    const Real eps = sys.params.epsilon;
    Real sup = 0.0;
    Vec2 flux = Vec2::Zero();
    // Edge nodes see the truncation of the domain rather than the pulse.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (std::abs(x[i]) >= eps) {
            sup = std::max(sup, F[i].cwiseAbs().maxCoeff());
        } else {
            // Control-volume width of node i.
            const Real wl = i > 0 ? 0.5 * (x[i] - x[i - 1]) : 0.0;
            const Real wr = i + 1 < n ? 0.5 * (x[i + 1] - x[i]) : 0.0;
            flux += (wl + wr) * F[i];
        }
    }
    return std::max(sup, flux.cwiseAbs().maxCoeff());
}

std::string series_csv(const SimDiagnostics& d)
{
    std::string out = "t,u1_center,u2_center,envelope\n";
    char buf[128];
    for (const auto& c : d.series) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", c.t, c.u1, c.u2, c.envelope);
        out += buf;
    }
    return out;
}

std::string snapshot_csv(const SimDiagnostics& d)
{
    std::string out = "x,u1,u2\n";
    char buf[96];
    for (std::size_t k = 0; k < d.x.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", d.x[k], d.u1[k], d.u2[k]);
        out += buf;
    }
    return out;
}

} // namespace pulsekit
