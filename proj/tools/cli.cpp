#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "pulsekit/normal_form.hpp"
#include "pulsekit/pde_simulator.hpp"

namespace pulsekit::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config io

namespace {

Real number_field(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key))
        throw Error(ErrorKind::config, std::string("missing field \"") + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number())
        throw Error(ErrorKind::config, std::string("field \"") + key + "\" must be a number");
    return v.get<Real>();
}

BivariatePoly poly_field(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key))
        throw Error(ErrorKind::config, std::string("missing field \"") + key + "\"");
    const auto& arr = j.at(key);
    if (!arr.is_array())
        throw Error(ErrorKind::config, std::string("field \"") + key + "\" must be an array of monomials");
    std::vector<Monomial> terms;
    for (const auto& m : arr) {
        if (!m.is_object() || !m.contains("p") || !m.contains("q") || !m.contains("c") ||
            !m.at("p").is_number_integer() || !m.at("q").is_number_integer() || !m.at("c").is_number())
            throw Error(ErrorKind::config, std::string("monomials in \"") + key + "\" need integer p, q and number c");
        terms.push_back({m.at("p").get<int>(), m.at("q").get<int>(), m.at("c").get<Real>()});
    }
    return BivariatePoly(std::move(terms));
}

Json complex_json(Complex z)
{
    return Json{{"re", z.real()}, {"im", z.imag()}};
}

Json optional_real(const std::optional<Real>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

void dump_to(const Json& j, int indent, int depth, std::string& out)
{
    const auto pad = [&](int d) {
        if (indent > 0) {
            out += '\n';
            out.append(std::size_t(indent * d), ' ');
        }
    };
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                out += ',';
            first = false;
            pad(depth + 1);
            out += Json(it.key()).dump();
            out += indent > 0 ? ": " : ":";
            dump_to(it.value(), indent, depth + 1, out);
        }
        pad(depth);
        out += '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += '[';
        bool first = true;
        for (const auto& v : j) {
            if (!first)
                out += ',';
            first = false;
            pad(depth + 1);
            dump_to(v, indent, depth + 1, out);
        }
        pad(depth);
        out += ']';
        return;
    }
    case Json::value_t::number_float: {
        const Real v = j.get<Real>();
        if (!std::isfinite(v)) {
            out += "null";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
        return;
    }
    default:
        out += j.dump();
    }
}

} // namespace

ReactionSystem system_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::config, "config must be a JSON object");
    ReactionSystem s;
    s.params.mu = number_field(j, "mu");
    s.params.alpha = number_field(j, "alpha");
    s.params.beta = number_field(j, "beta");
    s.params.b = number_field(j, "b");
    s.params.D = number_field(j, "D");
    s.params.epsilon = number_field(j, "epsilon");
    s.G1 = poly_field(j, "G1");
    s.G2 = poly_field(j, "G2");
    s.params.validate();
    return s;
}

Json system_to_json(const ReactionSystem& sys)
{
    const auto poly = [](const BivariatePoly& g) {
        Json arr = Json::array();
        for (const auto& m : g.terms())
            arr.push_back(Json{{"p", m.p}, {"q", m.q}, {"c", m.c}});
        return arr;
    };
    const auto& p = sys.params;
    return Json{{"mu", p.mu},           {"alpha", p.alpha}, {"beta", p.beta},     {"b", p.b},
                {"D", p.D},             {"epsilon", p.epsilon}, {"G1", poly(sys.G1)}, {"G2", poly(sys.G2)}};
}

ReactionSystem parse_config(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        int line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t k = 0; k < end; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(e.what(), line, col);
    }
    return system_from_json(j);
}

ReactionSystem load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::config, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump(const Json& j, int indent)
{
    std::string out;
    dump_to(j, indent, 0, out);
    return out;
}

ReactionSystem cubic_example(Real mu, Real nu, Real epsilon)
{
    ReactionSystem s;
    s.params.mu = mu;
    s.params.alpha = 2.0;
    s.params.beta = 2.0;
    s.params.b = std::sqrt(3.0) / 3.0;
    s.params.D = 4.0;
    s.params.epsilon = epsilon;
    std::vector<Monomial> g1{{0, 1, 1.0}, {0, 0, 1.0}};
    if (nu != 0.0)
        g1.push_back({3, 0, nu});
    s.G1 = BivariatePoly(std::move(g1));
    s.G2 = BivariatePoly({{1, 0, 1.0}, {0, 0, 2.0}});
    return s;
}

// ----------------------------------------------------------------- reports

namespace {

struct Tolerances {
    Real hopf = 1e-8;
    Real b_rel = 0.02;
    Real period_rel = 0.15;
    Real residual = 1e-10;
    Real fredholm = 1e-8;

    Json to_json() const
    {
        return Json{{"hopf_abs", hopf},
                    {"b_rel", b_rel},
                    {"period_rel", period_rel},
                    {"residual", residual},
                    {"fredholm", fredholm}};
    }
};

struct Globals {
    std::string config;
    std::string out_dir;
    bool emit_csv = false;
    Tolerances tol;
};

Json pulse_json(const PinnedPulse& p)
{
    return Json{{"C1", p.C1},
                {"C2", p.C2},
                {"center", Json::array({p.center1(), p.center2()})},
                {"residual", p.residual},
                {"degenerate", p.degenerate}};
}

Json eigen_json(const EigenSolution& e)
{
    return Json{{"lambda", complex_json(e.lambda)},
                {"det_abs", e.det_abs},
                {"C3", complex_json(e.C3)},
                {"C4", complex_json(e.C4)}};
}

Json verdict_json(const StabilityVerdict& v)
{
    Json eig = Json::array();
    for (const auto& e : v.eigenvalues)
        eig.push_back(eigen_json(e));
    return Json{{"stable", v.stable},
                {"leading_eigenvalue", v.leading_eigenvalue ? complex_json(*v.leading_eigenvalue) : Json(nullptr)},
                {"essential_spectrum_edge", v.essential_spectrum_edge},
                {"eigenvalues", eig}};
}

Json audit_json(const AssumptionAudit& a)
{
    Json arr = Json::array();
    for (const auto& e : a.entries)
        arr.push_back(Json{{"name", e.name}, {"satisfied", e.satisfied}, {"slack", e.slack}});
    return arr;
}

Json hopf_json(const HopfPoint& h, const std::optional<AssumptionAudit>& audit)
{
    Json j{{"family", h.family ? Json(to_string(*h.family)) : Json(nullptr)},
           {"mu_hat", h.mu_hat},
           {"omega_H", h.omega_H},
           {"n_r", h.n_r},
           {"n_i", h.n_i},
           {"transversality", h.transversality},
           {"eigenvalue", complex_json(h.eigen.lambda)},
           {"pulse", pulse_json(h.pulse)}};
    j["audit"] = audit ? audit_json(*audit) : Json::array();
    return j;
}

Json normal_form_json(const NormalFormReport& r, std::optional<Real> mu)
{
    const auto& d = r.data;
    Json j{{"mode", to_string(d.mode)},
           {"mu_hat", r.hopf.mu_hat},
           {"omega_H", r.hopf.omega_H},
           {"a", complex_json(d.a)},
           {"b", complex_json(d.b)},
           {"classification", to_string(d.classification)},
           {"I2", complex_json(d.I2)},
           {"L1", complex_json(d.L1)},
           {"fredholm_defect", r.fredholm},
           {"adjoint", Json{{"C5", complex_json(r.adjoint.C5)},
                            {"C6", complex_json(r.adjoint.C6)},
                            {"residual", r.adjoint.residual}}}};
    Json psi = Json::array();
    for (const auto* s : {&r.psi001, &r.psi200, &r.psi110})
        psi.push_back(Json{{"tag", to_string(s->tag)},
                           {"shift", complex_json(s->shift)},
                           {"fast_amp", complex_json(s->fast_amp)},
                           {"slow_amp", complex_json(s->slow_amp)},
                           {"residual", s->residual}});
    j["resolvents"] = psi;
    if (mu && d.classification != Criticality::degenerate) {
        const auto pred = predict_breather(d, r.hopf, *mu);
        j["predicted_amplitude"] = Json{{"mu", *mu}, {"amplitude", pred ? Json(pred->amplitude) : Json(nullptr)},
                                        {"stable", pred ? Json(pred->stable) : Json(nullptr)}};
    } else {
        j["predicted_amplitude"] = nullptr;
    }
    return j;
}

Json sim_json(const SimDiagnostics& d, const SimConfig& c)
{
    Json warnings = Json::array();
    for (const auto& w : d.warnings)
        warnings.push_back(w);
    return Json{{"outcome", to_string(d.outcome)},
                {"estimated_period", optional_real(d.estimated_period)},
                {"max_norm", d.max_norm},
                {"envelope_drift", d.drift},
                {"kick_norm", d.kick_norm},
                {"final_time", d.final_time},
                {"dt", d.dt},
                {"nodes", d.x.size()},
                {"config", Json{{"domain_half_width", c.domain_half_width},
                                {"dx", d.x.size() > 1 ? Json(d.x[d.x.size() / 2 + 1] - d.x[d.x.size() / 2]) : Json(nullptr)},
                                {"t_end", c.t_end},
                                {"boundary", to_string(c.boundary)},
                                {"initial", to_string(c.initial)},
                                {"kick", c.kick},
                                {"stepper", to_string(c.stepper)},
                                {"mesh", to_string(c.mesh)},
                                {"linearized", c.linearized}}},
                {"warnings", warnings}};
}

void write_file(const std::string& dir, const std::string& name, const std::string& text)
{
    const fs::path d = dir.empty() ? fs::path(".") : fs::path(dir);
    fs::create_directories(d);
    std::ofstream f(d / name);
    if (!f)
        throw Error(ErrorKind::config, "cannot write " + (d / name).string());
    f << text;
}

std::optional<std::pair<Real, Real>> parse_seed(const std::vector<Real>& v)
{
    if (v.empty())
        return std::nullopt;
    if (v.size() != 2)
        throw Error(ErrorKind::config, "--seed takes two numbers C1 C2");
    return std::make_pair(v[0], v[1]);
}

PinnedPulse choose_pulse(const ReactionSystem& sys, const std::optional<std::pair<Real, Real>>& seed)
{
    return seed ? select_pulse(sys, seed->first, seed->second) : unique_pulse(sys);
}

std::optional<AssumptionAudit> try_audit(const ReactionSystem& sys, const PinnedPulse& p)
{
    const auto fam = detect_family(sys);
    if (!fam)
        return std::nullopt;
    return audit_assumptions(sys.with_mu(p.mu), *fam, p);
}

// ---------------------------------------------------------------- commands

int cmd_analyze(const Globals& g, std::ostream& out)
{
    const auto sys = load_config(g.config);
    Json r{{"command", "analyze"}, {"system", system_to_json(sys)}, {"tolerances", g.tol.to_json()}};
    const auto pulses = solve_pulse(sys);
    Json pj = Json::array();
    for (const auto& p : pulses)
        pj.push_back(pulse_json(p));
    r["pulses"] = pj;
    const auto fam = detect_family(sys);
    r["family"] = fam ? Json(to_string(*fam)) : Json(nullptr);
    Json st = Json::array();
    std::string eig_csv = "pulse,family,re,im,det_abs,C3_re,C3_im,C4_re,C4_im\n";
    for (std::size_t k = 0; k < pulses.size(); ++k) {
        const auto& p = pulses[k];
        if (p.degenerate)
            continue;
        const auto v = classify_stability(sys, p);
        Json entry = verdict_json(v);
        entry["pulse_index"] = k;
        if (fam) {
            const auto red = reduce_to_cubic(sys, p, *fam);
            entry["cubic"] = Json{{"leading", red.cubic.leading}, {"A", red.cubic.A}, {"B", red.cubic.B}, {"E", red.cubic.E}};
        }
        st.push_back(entry);
        for (const auto& e : v.eigenvalues) {
            char buf[320];
            std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k,
                          fam ? to_string(*fam) : "", e.lambda.real(), e.lambda.imag(), e.det_abs, e.C3.real(),
                          e.C3.imag(), e.C4.real(), e.C4.imag());
            eig_csv += buf;
        }
        if (g.emit_csv) {
            const Real L = 20.0 / std::sqrt(sys.params.mu);
            std::vector<Real> grid;
            for (int i = 0; i <= 2000; ++i)
                grid.push_back(-L + 2.0 * L * i / 2000.0);
            write_file(g.out_dir, "pulse_" + std::to_string(k) + ".csv", to_csv(pulse_profile_csv(p, sys, grid)));
        }
    }
    r["stability"] = st;
    if (g.emit_csv)
        write_file(g.out_dir, "eigenvalues.csv", eig_csv);
    out << dump(r) << "\n";
    return Exit::ok;
}

struct HopfArgs {
    Real mu_min = 0.05;
    Real mu_max = 0.3;
    int steps = 64;
    std::vector<Real> seed;
};

int cmd_hopf(const Globals& g, const HopfArgs& a, std::ostream& out)
{
    const auto sys = load_config(g.config);
    const auto seed = parse_seed(a.seed);
    Json r{{"command", "hopf"}, {"system", system_to_json(sys)}, {"tolerances", g.tol.to_json()}};
    const auto fam = detect_family(sys);
    r["family"] = fam ? Json(to_string(*fam)) : Json(nullptr);
    const auto points = locate_hopf_scan(sys, a.mu_min, a.mu_max, a.steps, seed);
    Json hp = Json::array();
    for (const auto& h : points)
        hp.push_back(hopf_json(h, try_audit(sys, h.pulse)));
    r["hopf"] = hp;
    Json closed = nullptr;
    if (fam) {
        const auto s0 = sys.with_mu(a.mu_min);
        const auto p0 = choose_pulse(s0, seed);
        if (const auto h = locate_hopf_closed_form(reduce_to_cubic(s0, p0, *fam), sys))
            closed = hopf_json(*h, try_audit(sys, h->pulse));
    }
    r["closed_form"] = closed;
    if (points.empty())
        r["note"] = "no eigenvalue pair crosses the imaginary axis on this pulse branch in the scanned range";
    out << dump(r) << "\n";
    return Exit::ok;
}

struct NormalFormArgs {
    Real mu = 0.1;
    std::string mode = "consistent";
    Real mu_min = 0.0;
    Real mu_max = 0.0;
    int steps = 64;
    std::vector<Real> seed;
};

/// Hopf point for the normal form: closed form from the pulse at mu when
/// the family is recognized, otherwise a scan.
std::optional<HopfPoint> find_hopf(const ReactionSystem& sys, Real mu, Real mu_min, Real mu_max, int steps,
                                   const std::optional<std::pair<Real, Real>>& seed)
{
    if (mu_max > mu_min && mu_min > 0.0) {
        const auto pts = locate_hopf_scan(sys, mu_min, mu_max, steps, seed);
        if (pts.empty())
            return std::nullopt;
        return *std::min_element(pts.begin(), pts.end(), [&](const auto& x, const auto& y) {
            return std::abs(x.mu_hat - mu) < std::abs(y.mu_hat - mu);
        });
    }
    const auto s = sys.with_mu(mu);
    const auto p = choose_pulse(s, seed);
    return locate_hopf_closed_form(reduce_to_cubic(s, p), sys);
}

int cmd_normal_form(const Globals& g, const NormalFormArgs& a, std::ostream& out, std::ostream& err)
{
    const auto sys = load_config(g.config);
    const auto seed = parse_seed(a.seed);
    NormalFormOptions opt;
    if (a.mode == "perturbative")
        opt.mode = NormalFormMode::perturbative;
    else if (a.mode != "consistent")
        throw Error(ErrorKind::config, "--mode must be consistent or perturbative");
    const ReactionSystem hopf_sys = opt.mode == NormalFormMode::perturbative ? sys.affine_part() : sys;
    Json r{{"command", "normal-form"}, {"system", system_to_json(sys)}, {"tolerances", g.tol.to_json()}};
    Json warnings = Json::array();
    const auto h = find_hopf(hopf_sys, a.mu, a.mu_min, a.mu_max, a.steps, seed);
    if (!h)
        throw Error(ErrorKind::search_failure, "no Hopf point found for the normal form");
    const auto nf = compute_normal_form(sys, *h, opt);
    if (std::abs(a.mu - h->mu_hat) > 0.1 * h->mu_hat) {
        const std::string w = "mu is far from mu_hat; the normal form is asymptotic near mu_hat";
        warnings.push_back(w);
        err << "warning: " << w << "\n";
    }
    r["hopf"] = hopf_json(*h, std::nullopt);
    r["normal_form"] = normal_form_json(nf, a.mu);
    r["warnings"] = warnings;
    out << dump(r) << "\n";
    return Exit::ok;
}

struct SimArgs {
    SimConfig cfg;
    std::string boundary = "neumann";
    std::string initial = "pulse+kick";
    std::string stepper = "imex";
    std::string mesh = "uniform";
    std::vector<Real> seed;
};

void finish_sim_config(SimArgs& a)
{
    const auto pick = [](const std::string& v, auto options, const char* flag) {
        for (const auto& [name, value] : options)
            if (v == name)
                return value;
        throw Error(ErrorKind::config, std::string("unknown value for ") + flag + ": " + v);
    };
    a.cfg.boundary = pick(a.boundary, std::vector<std::pair<std::string, Boundary>>{{"neumann", Boundary::neumann}, {"dirichlet", Boundary::dirichlet}}, "--boundary");
    a.cfg.initial = pick(a.initial, std::vector<std::pair<std::string, InitialState>>{{"pulse", InitialState::pulse}, {"pulse+kick", InitialState::pulse_kick}, {"pulse+noise", InitialState::pulse_noise}, {"zero", InitialState::zero}}, "--initial");
    a.cfg.stepper = pick(a.stepper, std::vector<std::pair<std::string, Stepper>>{{"imex", Stepper::imex}, {"implicit", Stepper::implicit}}, "--stepper");
    a.cfg.mesh = pick(a.mesh, std::vector<std::pair<std::string, Mesh>>{{"uniform", Mesh::uniform}, {"graded", Mesh::graded}}, "--mesh");
    a.cfg.pulse_seed = parse_seed(a.seed);
}

int cmd_simulate(const Globals& g, SimArgs a, std::ostream& out)
{
    const auto sys = load_config(g.config);
    finish_sim_config(a);
    const auto d = run_simulation(sys, a.cfg);
    Json r{{"command", "simulate"}, {"system", system_to_json(sys)}, {"tolerances", g.tol.to_json()}};
    r["simulation"] = sim_json(d, a.cfg);
    if (g.emit_csv || !g.out_dir.empty()) {
        write_file(g.out_dir, "series.csv", series_csv(d));
        write_file(g.out_dir, "snapshot.csv", snapshot_csv(d));
    }
    out << dump(r) << "\n";
    return Exit::ok;
}

// ------------------------------------------------------- reproduction run

struct Row {
    std::string quantity;
    Json reference;
    Json computed;
    Json error;
    Real tolerance = 0.0;
    bool pass = false;
    bool flagged = false;
};

Json row_json(const Row& r)
{
    return Json{{"quantity", r.quantity}, {"paper_value", r.reference}, {"computed_value", r.computed},
                {"error", r.error},       {"tolerance", r.tolerance}, {"pass", r.pass},
                {"flagged_discrepancy", r.flagged}};
}

Row numeric_row(const std::string& name, Real reference, Real computed, Real tol, bool relative)
{
    const Real e = relative ? std::abs(computed - reference) / std::abs(reference) : std::abs(computed - reference);
    return Row{name, reference, computed, e, tol, std::isfinite(e) && e <= tol, false};
}

struct Regime {
    Real mu, nu;
    std::vector<Outcome> accepted;
    const char* expected;
};

int cmd_reproduce(const Globals& g, bool skip_sim, Real t_end, std::ostream& out, std::ostream& err)
{
    const Real s2 = std::sqrt(2.0);
    const Real cp = std::cbrt(3.0 + 2.0 * s2), cm = std::cbrt(3.0 - 2.0 * s2);
    const Real mu_ref = (4.0 - cp - cm) / 12.0;
    const Real omega_ref = std::sqrt(3.0) / 12.0 * (cp - cm);

    Json r{{"command", "reproduce-paper-example"}, {"tolerances", g.tol.to_json()}};
    std::vector<Row> rows;

    // Leading-order system (nu = 0) carries the Hopf point.
    const auto base = cubic_example(0.1, 0.0);
    const auto p0 = unique_pulse(base);
    const auto h = locate_hopf_closed_form(reduce_to_cubic(base, p0), base);
    if (!h)
        throw Error(ErrorKind::search_failure, "closed-form Hopf point missing for the reference example");
    const auto scan = locate_hopf_scan(base, 0.05, 0.3, 64);
    rows.push_back(numeric_row("mu_hat (closed form)", mu_ref, h->mu_hat, g.tol.hopf, false));
    rows.push_back(numeric_row("omega_H (closed form)", omega_ref, h->omega_H, g.tol.hopf, false));
    if (scan.size() == 1) {
        rows.push_back(numeric_row("mu_hat (scan)", mu_ref, scan[0].mu_hat, g.tol.hopf, false));
        rows.push_back(numeric_row("omega_H (scan)", omega_ref, scan[0].omega_H, g.tol.hopf, false));
    } else {
        rows.push_back(Row{"Hopf points in scan", 1, scan.size(), nullptr, 0.0, false, false});
    }

    Json nfs = Json::array();
    for (Real nu : {-0.001, 0.001}) {
        const auto sys = cubic_example(0.1, nu);
        NormalFormOptions opt;
        opt.mode = NormalFormMode::perturbative;
        const auto nf = compute_normal_form(sys, *h, opt);
        nfs.push_back(Json{{"nu", nu}, {"normal_form", normal_form_json(nf, 0.1)}});
        const Real sgn = nu < 0.0 ? 1.0 : -1.0;
        char tag[32];
        std::snprintf(tag, sizeof tag, "nu=%+.3f", nu);
        rows.push_back(numeric_row(std::string("b_r ") + tag, sgn * -1.49318, nf.data.b_r, g.tol.b_rel, true));
        rows.push_back(numeric_row(std::string("b_i ") + tag, sgn * 3.7192, nf.data.b_i, g.tol.b_rel, true));
        const std::string want = nu < 0.0 ? "supercritical" : "subcritical";
        const std::string got = to_string(nf.data.classification);
        rows.push_back(Row{std::string("classification ") + tag, want, got, nullptr, 0.0, want == got, false});
        Row a{std::string("a ") + tag, 1.0, nf.data.a_r, std::abs(nf.data.a_r - 1.0), 0.0, true, true};
        rows.push_back(a);
    }
    r["normal_forms"] = nfs;

    if (!skip_sim) {
        const std::vector<Regime> regimes{
            {0.1, -0.001, {Outcome::sustained}, "sustained"},
            {0.1, 0.001, {Outcome::growing, Outcome::blow_up}, "growing or blow-up"},
            {0.2, 0.001, {Outcome::growing}, "growing"},
            {0.2, -0.001, {Outcome::decay}, "decay"},
        };
        Json sims = Json::array();
        for (const auto& rg : regimes) {
            const auto sys = cubic_example(rg.mu, rg.nu);
            SimConfig cfg;
            cfg.t_end = t_end;
            const auto seed_pulse = unique_pulse(cubic_example(rg.mu, 0.0));
            cfg.pulse_seed = std::make_pair(seed_pulse.C1, seed_pulse.C2);
            const auto d = run_simulation(sys, cfg);
            char tag[48];
            std::snprintf(tag, sizeof tag, "outcome mu=%.1f nu=%+.3f", rg.mu, rg.nu);
            const bool ok = std::find(rg.accepted.begin(), rg.accepted.end(), d.outcome) != rg.accepted.end();
            rows.push_back(Row{tag, rg.expected, to_string(d.outcome), nullptr, 0.0, ok, false});
            if (rg.accepted.front() == Outcome::sustained) {
                const Real want = 2.0 * std::numbers::pi / omega_ref;
                if (d.estimated_period)
                    rows.push_back(numeric_row("period mu=0.1 nu=-0.001", want, *d.estimated_period, g.tol.period_rel, true));
                else
                    rows.push_back(Row{"period mu=0.1 nu=-0.001", want, nullptr, nullptr, g.tol.period_rel, false, false});
            }
            Json sj = sim_json(d, cfg);
            sj["mu"] = rg.mu;
            sj["nu"] = rg.nu;
            sims.push_back(sj);
            if (g.emit_csv) {
                char name[64];
                std::snprintf(name, sizeof name, "regime_mu%.1f_nu%+.3f.csv", rg.mu, rg.nu);
                write_file(g.out_dir, name, series_csv(d));
            }
        }
        r["simulations"] = sims;
    }

    Json rj = Json::array();
    bool all = true;
    for (const auto& row : rows) {
        rj.push_back(row_json(row));
        if (!row.flagged && !row.pass) {
            all = false;
            err << "tolerance: " << row.quantity << "\n";
        }
    }
    r["paper_comparison"] = rj;
    r["all_within_tolerance"] = all;
    out << dump(r) << "\n";
    return all ? Exit::ok : Exit::tolerance;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
    Real mu_from = 0.05;
    Real mu_to = 0.3;
    int steps = 10;
    bool simulate = false;
    Real t_end = 300.0;
    std::vector<Real> seed;
};

unsigned sweep_threads()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PULSEKIT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

int cmd_sweep(const Globals& g, const SweepArgs& a, std::ostream& out)
{
    const auto sys = load_config(g.config);
    const auto seed = parse_seed(a.seed);
    if (a.steps < 1 || !(a.mu_to > a.mu_from))
        throw Error(ErrorKind::config, "sweep needs steps >= 1 and mu_to > mu_from");
    const int n = a.steps + 1;
    std::vector<Json> results(n);
    std::atomic<int> next{0};
    std::mutex fail_mu;
    std::optional<Error> failure;
    const auto worker = [&] {
        for (int k; (k = next++) < n;) {
            const Real mu = a.mu_from + (a.mu_to - a.mu_from) * k / a.steps;
            Json row{{"mu", mu}};
            try {
                const auto s = sys.with_mu(mu);
                const auto p = choose_pulse(s, seed);
                row["pulse"] = pulse_json(p);
                const auto v = classify_stability(s, p);
                row["stable"] = v.stable;
                row["leading_eigenvalue"] = v.leading_eigenvalue ? complex_json(*v.leading_eigenvalue) : Json(nullptr);
                if (a.simulate) {
                    SimConfig cfg;
                    cfg.t_end = a.t_end;
                    cfg.pulse_seed = std::make_pair(p.C1, p.C2);
                    const auto d = run_simulation(s, cfg);
                    row["outcome"] = to_string(d.outcome);
                    row["estimated_period"] = optional_real(d.estimated_period);
                }
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::config) {
                    std::lock_guard lock(fail_mu);
                    failure = e;
                }
                row["error"] = Json{{"kind", to_string(e.kind())}, {"message", e.what()}};
            }
            results[k] = std::move(row);
        }
    };
    const unsigned nt = std::min<unsigned>(sweep_threads(), static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < nt; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (failure)
        throw *failure;
    Json r{{"command", "sweep"}, {"system", system_to_json(sys)}, {"tolerances", g.tol.to_json()}};
    Json arr = Json::array();
    for (auto& j : results)
        arr.push_back(std::move(j));
    r["sweep"] = arr;
    out << dump(r) << "\n";
    return Exit::ok;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Pinned pulses, Hopf points and breathing pulses in two-component impurity systems"};
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "ReactionSystem JSON");
    app.add_option("--out-dir", g.out_dir, "directory for CSV artifacts");
    app.add_flag("--emit-csv", g.emit_csv, "write CSV artifacts");
    app.add_option("--tol-hopf", g.tol.hopf, "absolute tolerance on mu_hat and omega_H")->capture_default_str();
    app.add_option("--tol-b", g.tol.b_rel, "relative tolerance on Re b and Im b")->capture_default_str();
    app.add_option("--tol-period", g.tol.period_rel, "relative tolerance on the breathing period")->capture_default_str();
    app.add_option("--tol-residual", g.tol.residual, "matching residual bound")->capture_default_str();
    app.add_option("--tol-fredholm", g.tol.fredholm, "Fredholm defect bound")->capture_default_str();

    auto* analyze = app.add_subcommand("analyze", "pulses, eigenvalues and stability");

    HopfArgs ha;
    auto* hopf = app.add_subcommand("hopf", "scan mu for Hopf points");
    hopf->add_option("--mu-min", ha.mu_min)->capture_default_str();
    hopf->add_option("--mu-max", ha.mu_max)->capture_default_str();
    hopf->add_option("--steps", ha.steps)->capture_default_str();
    hopf->add_option("--seed", ha.seed, "pulse seed C1 C2 at mu-min")->expected(2);

    NormalFormArgs na;
    auto* nform = app.add_subcommand("normal-form", "normal-form coefficients at the Hopf point");
    nform->add_option("--mu", na.mu, "operating point")->capture_default_str();
    nform->add_option("--mode", na.mode, "consistent or perturbative")->capture_default_str();
    nform->add_option("--mu-min", na.mu_min, "scan range; closed form when omitted");
    nform->add_option("--mu-max", na.mu_max);
    nform->add_option("--steps", na.steps)->capture_default_str();
    nform->add_option("--seed", na.seed)->expected(2);

    SimArgs sa;
    auto* sim = app.add_subcommand("simulate", "direct PDE simulation");
    sim->add_option("--half-width", sa.cfg.domain_half_width)->capture_default_str();
    sim->add_option("--dx", sa.cfg.dx, "core spacing, 0 = eps^2/5")->capture_default_str();
    sim->add_option("--dt", sa.cfg.dt)->capture_default_str();
    sim->add_option("--t-end", sa.cfg.t_end)->capture_default_str();
    sim->add_option("--boundary", sa.boundary)->capture_default_str();
    sim->add_option("--initial", sa.initial)->capture_default_str();
    sim->add_option("--kick", sa.cfg.kick)->capture_default_str();
    sim->add_option("--stepper", sa.stepper)->capture_default_str();
    sim->add_option("--mesh", sa.mesh)->capture_default_str();
    sim->add_flag("--linearized", sa.cfg.linearized);
    sim->add_option("--noise-seed", sa.cfg.noise_seed)->capture_default_str();
    sim->add_option("--seed", sa.seed)->expected(2);

    bool skip_sim = false;
    Real repro_t_end = 600.0;
    auto* repro = app.add_subcommand("reproduce-paper-example", "end-to-end run of the cubic-correction example");
    repro->add_flag("--skip-simulation", skip_sim);
    repro->add_option("--t-end", repro_t_end)->capture_default_str();

    SweepArgs wa;
    auto* sweep = app.add_subcommand("sweep", "stability over a mu grid, runs in parallel");
    sweep->add_option("--mu-from", wa.mu_from)->capture_default_str();
    sweep->add_option("--mu-to", wa.mu_to)->capture_default_str();
    sweep->add_option("--steps", wa.steps)->capture_default_str();
    sweep->add_flag("--simulate", wa.simulate);
    sweep->add_option("--t-end", wa.t_end)->capture_default_str();
    sweep->add_option("--seed", wa.seed)->expected(2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Exit::ok : Exit::usage;
    }

    try {
        const bool needs_config = !repro->parsed();
        if (needs_config && g.config.empty()) {
            err << "error: --config is required\n";
            return Exit::usage;
        }
        if (analyze->parsed())
            return cmd_analyze(g, out);
        if (hopf->parsed())
            return cmd_hopf(g, ha, out);
        if (nform->parsed())
            return cmd_normal_form(g, na, out, err);
        if (sim->parsed())
            return cmd_simulate(g, sa, out);
        if (repro->parsed())
            return cmd_reproduce(g, skip_sim, repro_t_end, out, err);
        if (sweep->parsed())
            return cmd_sweep(g, wa, out);
    } catch (const ParseError& e) {
        err << "error: config parse failure at line " << e.line() << ", column " << e.column() << ": " << e.what()
            << "\n";
        return Exit::usage;
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return e.kind() == ErrorKind::config ? Exit::usage : Exit::solver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Exit::solver;
    }
    return Exit::usage;
}

} // namespace pulsekit::cli
