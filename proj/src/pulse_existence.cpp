#include "pulsekit/pulse_existence.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <Eigen/SVD>

namespace pulsekit {

Real core_value2(const SystemParams& p, Real C1, Real C2)
{
    if (branch_for(p.D) == Branch::resonant)
        return C2 - p.b * C1 / (4.0 * p.mu);
    return C2 + p.b * C1 / ((p.D - 1.0) * p.mu);
}

Real slow_amplitude2(const SystemParams& p, Real v1, Real v2)
{
    if (branch_for(p.D) == Branch::resonant)
        return v2 + p.b * v1 / (4.0 * p.mu);
    return v2 - p.b * v1 / ((p.D - 1.0) * p.mu);
}

Vec2 matching_residual(const ReactionSystem& sys, Real C1, Real C2)
{
    const auto& p = sys.params;
    const Real sm = std::sqrt(p.mu);
    const Real W = core_value2(p, C1, C2);
    Vec2 r;
    r(0) = 2.0 * sm * C1 - p.alpha * sys.G1(C1, W);
    if (branch_for(p.D) == Branch::resonant)
        r(1) = 2.0 * (sm * C2 + p.b * C1 / (4.0 * sm)) - p.beta * sys.G2(C1, W);
    else
        r(1) = 2.0 * (std::sqrt(p.mu / p.D) * C2 + p.b * C1 / ((p.D - 1.0) * sm)) -
               p.beta / p.D * sys.G2(C1, W);
    return r;
}

Vec2 center_residual(const ReactionSystem& sys, Real v1, Real v2)
{
    const auto& p = sys.params;
    const Real sD = std::sqrt(p.D);
    Vec2 r;
    r(0) = 2.0 * std::sqrt(p.mu) * v1 - p.alpha * sys.G1(v1, v2);
    r(1) = 2.0 * std::sqrt(p.mu / p.D) * v2 + 2.0 * p.b * v1 / (std::sqrt(p.mu * p.D) * (sD + 1.0)) -
           p.beta / p.D * sys.G2(v1, v2);
    return r;
}

Mat2 center_residual_jacobian(const ReactionSystem& sys, Real v1, Real v2)
{
    const auto& p = sys.params;
    const Real sD = std::sqrt(p.D);
    const Mat2 J = sys.jacobian(v1, v2);
    Mat2 out;
    out(0, 0) = 2.0 * std::sqrt(p.mu) - p.alpha * J(0, 0);
    out(0, 1) = -p.alpha * J(0, 1);
    out(1, 0) = 2.0 * p.b / (std::sqrt(p.mu * p.D) * (sD + 1.0)) - p.beta / p.D * J(1, 0);
    out(1, 1) = 2.0 * std::sqrt(p.mu / p.D) - p.beta / p.D * J(1, 1);
    return out;
}

namespace {

Real residual_scale(const ReactionSystem& sys, Real v1, Real v2)
{
    const auto& p = sys.params;
    const Real s = std::abs(2.0 * std::sqrt(p.mu) * v1) + std::abs(p.alpha * sys.G1(v1, v2)) +
                   std::abs(2.0 * std::sqrt(p.mu / p.D) * v2) +
                   std::abs(p.beta / p.D * sys.G2(v1, v2));
    return std::max<Real>(1.0, s);
}

/// Jacobian of the (C1, C2) system: center Jacobian times dv/dC.
Mat2 amplitude_jacobian(const ReactionSystem& sys, Real v1, Real v2)
{
    const auto& p = sys.params;
    Mat2 T = Mat2::Identity();
    T(1, 0) = branch_for(p.D) == Branch::resonant ? -p.b / (4.0 * p.mu)
                                                  : p.b / ((p.D - 1.0) * p.mu);
    return center_residual_jacobian(sys, v1, v2) * T;
}

PinnedPulse make_pulse(const ReactionSystem& sys, Real v1, Real v2, const PulseSolveOptions& opt)
{
    const auto& p = sys.params;
    PinnedPulse out;
    out.mu = p.mu;
    out.C1 = v1;
    out.C2 = slow_amplitude2(p, v1, v2);
    out.profile = PiecewiseExpSolution::from_center(Complex(p.mu), v1, v2, p.b, p.D,
                                                    Coupling::forward);
    out.residual = center_residual(sys, v1, v2).cwiseAbs().maxCoeff();
    if (std::abs(p.D - 1.0) >= near_resonant_tol)
        out.residual = std::max(out.residual,
                                matching_residual(sys, out.C1, out.C2).cwiseAbs().maxCoeff());
    Eigen::JacobiSVD<Mat2> svd(amplitude_jacobian(sys, v1, v2));
    out.degenerate = svd.singularValues()(1) <= opt.degenerate_sv;
    return out;
}

std::optional<Vec2> newton_center(const ReactionSystem& sys, Vec2 v, const PulseSolveOptions& opt)
{
    Vec2 r = center_residual(sys, v(0), v(1));
    Real phi = 0.5 * r.squaredNorm();
    for (int it = 0; it < opt.max_iter; ++it) {
        const Mat2 J = center_residual_jacobian(sys, v(0), v(1));
        const Real det = J.determinant();
        if (!std::isfinite(det) || det == 0.0)
            return std::nullopt;
        const Vec2 step = -J.partialPivLu().solve(r);
        Real lam = 1.0;
        Vec2 trial;
        Vec2 rt;
        Real phit = 0.0;
        for (;;) {
            trial = v + lam * step;
            rt = center_residual(sys, trial(0), trial(1));
            phit = 0.5 * rt.squaredNorm();
            if (phit <= (1.0 - 1e-4 * lam) * phi || lam < 1e-10)
                break;
            lam *= 0.5;
        }
        if (lam < 1e-10 && phit > phi)
            return std::nullopt;
        const Real step_size = (lam * step).cwiseAbs().maxCoeff();
        v = trial;
        r = rt;
        phi = phit;
        const Real scale = residual_scale(sys, v(0), v(1));
        if (!v.allFinite())
            return std::nullopt;
        if (step_size <= opt.tol * (1.0 + v.cwiseAbs().maxCoeff()) &&
            r.cwiseAbs().maxCoeff() <= opt.tol * scale)
            return v;
        if (r.cwiseAbs().maxCoeff() <= 0.1 * opt.tol * scale && lam == 1.0)
            return v;
    }
    return std::nullopt;
}

} // namespace

std::optional<PinnedPulse> refine_pulse(const ReactionSystem& sys, Real C1, Real C2,
                                        const PulseSolveOptions& opt)
{
    const auto& p = sys.params;
    auto v = newton_center(sys, Vec2(C1, core_value2(p, C1, C2)), opt);
    if (!v)
        return std::nullopt;
    return make_pulse(sys, (*v)(0), (*v)(1), opt);
}

std::vector<PinnedPulse> solve_pulse(const ReactionSystem& sys,
                                     const std::vector<std::pair<Real, Real>>& seeds,
                                     const PulseSolveOptions& opt)
{
    sys.params.validate();
    const auto& p = sys.params;
    std::vector<std::pair<Real, Real>> all = seeds;
    if (opt.grid_scan) {
        const Real R = 10.0 * std::max<Real>(1.0, std::abs(p.alpha) + std::abs(p.beta)) *
                       (1.0 + 1.0 / p.mu);
        const int n = opt.grid_points;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                all.emplace_back(-R + 2.0 * R * i / (n - 1), -R + 2.0 * R * j / (n - 1));
    }
    std::vector<Vec2> roots;
    for (const auto& [c1, c2] : all) {
        auto v = newton_center(sys, Vec2(c1, core_value2(p, c1, c2)), opt);
        if (!v)
            continue;
        const bool seen = std::any_of(roots.begin(), roots.end(), [&](const Vec2& r) {
            return (r - *v).cwiseAbs().maxCoeff() <=
                   opt.dedup_distance * (1.0 + r.cwiseAbs().maxCoeff());
        });
        if (!seen)
            roots.push_back(*v);
    }
    std::sort(roots.begin(), roots.end(), [](const Vec2& a, const Vec2& b) {
        return a(0) != b(0) ? a(0) < b(0) : a(1) < b(1);
    });
    std::vector<PinnedPulse> out;
    for (const auto& v : roots)
        out.push_back(make_pulse(sys, v(0), v(1), opt));
    return out;
}

PinnedPulse select_pulse(const ReactionSystem& sys, Real C1, Real C2)
{
    auto roots = solve_pulse(sys, {{C1, C2}});
    if (roots.empty()) {
        std::ostringstream msg;
        msg << "no pinned pulse exists at mu = " << sys.params.mu;
        throw Error(ErrorKind::continuation, msg.str());
    }
    const Real v2 = core_value2(sys.params, C1, C2);
    return *std::min_element(roots.begin(), roots.end(), [&](const auto& a, const auto& b) {
        return std::hypot(a.C1 - C1, a.center2() - v2) < std::hypot(b.C1 - C1, b.center2() - v2);
    });
}

PinnedPulse unique_pulse(const ReactionSystem& sys)
{
    auto roots = solve_pulse(sys);
    std::vector<PinnedPulse> good;
    for (auto& r : roots)
        if (!r.degenerate)
            good.push_back(r);
    if (good.empty()) {
        std::ostringstream msg;
        msg << "no non-degenerate pinned pulse at mu = " << sys.params.mu;
        throw Error(ErrorKind::continuation, msg.str());
    }
    if (good.size() > 1) {
        std::ostringstream msg;
        msg << good.size() << " pinned pulses at mu = " << sys.params.mu
            << "; select one by seed (C1, C2):";
        for (const auto& r : good)
            msg << " (" << r.C1 << ", " << r.C2 << ")";
        throw Error(ErrorKind::consistency, msg.str());
    }
    return good.front();
}

ProfileTable pulse_profile_csv(const PinnedPulse& p, const ReactionSystem& sys,
                               const std::vector<Real>& grid)
{
    ProfileTable t;
    for (Real x : grid) {
        const auto [u1, u2] = eval_piecewise(p.profile, sys, x);
        t.x.push_back(x);
        t.u1.push_back(u1.real());
        t.u2.push_back(u2.real());
    }
    return t;
}

std::string to_csv(const ProfileTable& table)
{
    std::string out = "x,u1,u2\n";
    char buf[96];
    for (std::size_t k = 0; k < table.x.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", table.x[k], table.u1[k],
                      table.u2[k]);
        out += buf;
    }
    return out;
}

} // namespace pulsekit
