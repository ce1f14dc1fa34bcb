#include "equistab/commands.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "equistab/dynamics.hpp"
#include "equistab/error.hpp"
#include "equistab/mgs.hpp"
#include "equistab/model.hpp"
#include "equistab/slice.hpp"
#include "equistab/stability.hpp"

namespace equistab {

using ojson = nlohmann::ordered_json;

namespace {

ojson to_json(const Vec &v)
{
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v(i));
    }
    return a;
}

ojson to_json(const Mat &m)
{
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        a.push_back(to_json(Vec(m.row(i).transpose())));
    }
    return a;
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

PointSampling sampling_for(const Model &model)
{
    PointSampling ps;
    ps.center = model.points.empty() ? Vec::Zero(model.system->dim()) : model.points.begin()->second;
    ps.spread = 0.3;
    return ps;
}

struct CheckRow {
    std::string name;
    double value;
    double threshold;
};

std::vector<CheckRow> run_checks(const Model &model, std::uint64_t seed)
{
    const HamiltonianSystem &s = *model.system;
    const PointSampling ps = sampling_for(model);
    std::vector<CheckRow> rows;
    rows.push_back({"action_homomorphism", s.action.homomorphism_defect(), 1e-9});
    if (model.orthogonal) {
        rows.push_back({"action_orthogonal", s.action.skew_defect(), 1e-9});
    }
    rows.push_back({"ad_invariance", s.group().verify_ad_invariance(200, seed).max_violation, 1e-9});
    rows.push_back({"omega_invariance", s.omega.invariance_violation(s.action, 100, seed + 1).max_relative, 1e-9});
    const MomentumReport mr = verify_momentum_map(s, 100, seed + 2, ps);
    rows.push_back({"momentum_property", mr.property_violation, 1e-8});
    rows.push_back({"momentum_equivariance", mr.equivariance_violation, 1e-8});
    rows.push_back({"hamiltonian_invariance", check_invariance(s.h, s.action, 100, seed + 3, ps).max_relative, 1e-8});
    double inv = 0.0;
    for (std::size_t i = 0; i < model.invariants.generators.size(); ++i) {
        inv = std::max(inv, check_invariance(model.invariants.generators[i], s.action, 100, seed + 4 + i, ps)
                                .max_relative);
    }
    rows.push_back({"invariant_coordinates", inv, 1e-8});
    rows.push_back({"field_equivariance",
                    check_equivariance(s.action, hamiltonian_field(s), 100, seed + 50, ps).max_relative, 1e-8});
    return rows;
}

ojson rows_json(const std::vector<CheckRow> &rows, bool &all_pass)
{
    ojson out = ojson::object();
    all_pass = true;
    for (const auto &r : rows) {
        const bool pass = r.value <= r.threshold;
        all_pass = all_pass && pass;
        out[r.name] = {{"value", r.value}, {"threshold", r.threshold}, {"pass", pass}};
    }
    return out;
}

ojson header(const Model &model, const CommandFlags &flags)
{
    ojson h;
    h["tool"] = {{"name", "equistab"}, {"version", version_string}};
    h["model"] = {{"name", model.name},
                  {"hash", model.hash},
                  {"momentum", model.momentum_auto ? "auto" : "explicit"},
                  {"assertions", {{"proper_action", model.proper_action}, {"orthogonal", model.orthogonal}}}};
    h["seed"] = flags.seed;
    return h;
}

ProbeConfig probe_config(const CommandFlags &flags, int samples)
{
    ProbeConfig pc;
    pc.eps = flags.eps;
    pc.deltas = flags.deltas;
    pc.n_samples = samples;
    pc.horizon = flags.horizon;
    pc.step = flags.step;
    pc.seed = flags.seed;
    pc.threads = flags.threads;
    return pc;
}

ojson probe_json(const ProbeResult &pr, const ProbeConfig &pc)
{
    ojson j;
    j["verdict"] = pr.vacuous ? "NoEscapeObserved" : (pr.escaped ? "Escaped" : "NoEscapeObserved");
    j["vacuous"] = pr.vacuous;
    j["eps"] = pc.eps;
    j["horizon"] = pc.horizon;
    j["step"] = pc.step;
    j["samples"] = pc.n_samples;
    ojson per = ojson::array();
    for (const auto &d : pr.per_delta) {
        per.push_back({{"delta", d.delta},
                       {"escaped", d.escaped},
                       {"max_distance", std::isfinite(d.max_distance) ? ojson(d.max_distance) : ojson("inf")}});
    }
    j["per_delta"] = per;
    if (pr.witness) {
        const ProbeWitness &w = *pr.witness;
        j["witness"] = {{"sample", w.sample},
                        {"delta", w.delta},
                        {"time", w.time},
                        {"distance", std::isfinite(w.distance) ? ojson(w.distance) : ojson("inf")},
                        {"initial", to_json(w.initial)},
                        {"state", to_json(w.state)}};
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

void require_invariants(const Model &model)
{
    if (model.invariants.generators.empty()) {
        fail(ErrorCode::InvalidModel, "model declares no \"invariants\"; orbit distances need them");
    }
}

std::string csv_header(const Model &model)
{
    std::string h = "t";
    for (int i = 1; i <= model.system->dim(); ++i) {
        h += ",x" + std::to_string(i);
    }
    h += ",h,phi2";
    for (int i = 1; i <= model.invariants.size(); ++i) {
        h += ",inv" + std::to_string(i);
    }
    return h + "\n";
}

std::string csv_row(const Model &model, double t, const Vec &x)
{
    std::string r = fmt(t);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        r += "," + fmt(x(i));
    }
    r += "," + fmt(model.system->h.eval(x)) + "," + fmt(phi_norm_sq(*model.system, x));
    const Vec inv = model.invariants(x);
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        r += "," + fmt(inv(i));
    }
    return r + "\n";
}

std::string point_name(const Model &model, const std::string &point)
{
    if (point.empty() && !model.points.empty()) {
        return model.points.begin()->first;
    }
    return point;
}

Vec perturbation(int n, std::uint64_t seed, double size)
{
    Sampler rng(seed, 77);
    return rng.unit(n) * size;
}

} // namespace

CommandResult cmd_verify(const std::string &model_path, const CommandFlags &flags)
{
    const Model model = load_model(model_path);
    const auto rows = run_checks(model, flags.seed);
    bool all = true;
    ojson rep = header(model, flags);
    rep["verification"] = rows_json(rows, all);
    rep["verification_passed"] = all;
    if (model.invariants.size() > 0) {
        const PointSampling ps = sampling_for(model);
        const SeparationReport sep =
            invariant_separation(model.invariants, model.system->action, ps.center, ps.spread, 100, 64, flags.seed + 70);
        rep["invariant_separation"] = {{"pairs", sep.pairs},
                                       {"min_orbit_distance", sep.min_orbit_distance},
                                       {"min_invariant_distance", sep.min_invariant_distance},
                                       {"asserted", false}};
    }
    CommandResult out;
    out.report = rep.dump(2) + "\n";
    std::ostringstream t;
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s %-12s %-10s %s\n", "check", "value", "threshold", "result");
    t << line;
    for (const auto &r : rows) {
        std::snprintf(line, sizeof(line), "%-24s %-12.3e %-10.1e %s\n", r.name.c_str(), r.value, r.threshold,
                      r.value <= r.threshold ? "pass" : "FAIL");
        t << line;
    }
    if (rep.contains("invariant_separation")) {
        std::snprintf(line, sizeof(line), "%-24s %-12.3e %-10s %s\n", "invariant_separation",
                      rep["invariant_separation"]["min_invariant_distance"].get<double>(), "-", "info");
        t << line;
    }
    out.text = t.str();
    out.exit_code = all ? 0 : 1;
    return out;
}

CommandResult cmd_analyze(const std::string &model_path, const std::string &point, const CommandFlags &flags)
{
    const Model model = load_model(model_path);
    const HamiltonianSystem &s = *model.system;
    const Vec &m = model.point(point);
    ojson rep = header(model, flags);
    rep["point"] = {{"name", point_name(model, point)}, {"coords", to_json(m)}};

    StabilityConfig sc;
    sc.tol_releq = flags.tol_releq;
    sc.tol_nondeg = flags.tol_nondeg;
    rep["tolerances"] = {{"releq", sc.tol_releq},
                         {"nondeg", sc.tol_nondeg ? ojson(*sc.tol_nondeg) : ojson("relative 1e-8")},
                         {"critical", sc.tol_critical},
                         {"rank_gap_min", sc.rank_gap_min},
                         {"radius_hint", flags.radius_hint}};

    bool verified = true;
    rep["verification"] = rows_json(run_checks(model, flags.seed), verified);
    if (!verified) {
        fail(ErrorCode::InvalidModel, "model failed its sampled invariant checks; run 'verify' for the table");
    }

    const StabilityReport sr = mro_verdict(s, m, sc);
    rep["stability"] = {{"mu", to_json(sr.mu.coords)},
                        {"xi", to_json(sr.xi.coords)},
                        {"residual_field", sr.residual_field},
                        {"residual_critical", sr.residual_critical},
                        {"W_dim", sr.W_dim},
                        {"freedom_dim", sr.freedom_dim},
                        {"search_evaluations", sr.trace.size()},
                        {"restricted_hessian", to_json(sr.hessian)},
                        {"eigenvalues", to_json(sr.eigenvalues)},
                        {"nondeg_tol", sr.nondeg_tol},
                        {"class", to_string(sr.cls)},
                        {"verdict", to_string(sr.verdict)}};

    if (sr.W_dim > 0) {
        const ComplementTrialReport ct = complement_independence_check(s, m, sr.xi, 10, flags.seed + 9);
        rep["complement_independence"] = {{"trials", ct.classes.size()}, {"all_agree", ct.all_agree}};
    }

    // Shift h and Phi so both vanish at m; legitimate because Phi(m) is coadjoint-fixed.
    const HamiltonianSystem rec = s.recentered(m);
    try {
        const MGSData md = mgs_data(rec, m, flags.tol_releq);
        Vec skew = Vec(0);
        if (md.omega_W.size() > 0) {
            Eigen::JacobiSVD<Mat> svd(md.omega_W);
            skew = svd.singularValues();
        }
        const ReductionReport rr = reduction_check(rec, m, sr.xi, sr.W_basis, md);
        const ShadowReport sh = mgs_shadow_check(rec, m, md, 20, flags.seed + 11);
        const int n = s.dim();
        rep["mgs"] = {{"K_dim", md.K_basis.cols()},
                      {"k0_dim", md.k0_basis.cols()},
                      {"W_dim", md.W_basis.cols()},
                      {"orbit_dim", md.orbit_dim},
                      {"dimension_check", md.k0_basis.cols() + md.W_basis.cols() + md.orbit_dim == n},
                      {"k0_radius", md.k0_radius},
                      {"W_radius", md.W_radius},
                      {"omega_W_singular_values", to_json(skew)},
                      {"reduction_classes_equal", rr.classes_equal},
                      {"reduction_class", to_string(rr.on_mgs_W.cls)},
                      {"momentum_shadow_violation", sh.max_violation}};
    } catch (const Error &e) {
        rep["mgs"] = {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    }

    IntegratorConfig ic;
    ic.step = flags.step;
    ic.horizon = std::min(flags.horizon, 100.0);
    const Vec m0 = m + perturbation(s.dim(), flags.seed, 1e-3);
    const ConservationReport cr = conservation_report(s, FieldVariant::Hamiltonian, AlgebraVector(Vec::Zero(s.group().dim())), m0, ic);
    rep["conservation"] = {{"field", "hamiltonian"},
                           {"step", ic.step},
                           {"horizon", ic.horizon},
                           {"drift_h", cr.drift_h},
                           {"drift_phi2", cr.drift_phi2}};

    if (sr.verdict == Verdict::StableModGmu) {
        TubeOptions to;
        to.radius_hint = flags.radius_hint;
        const TubeModel tube = build_tube(rec.action, m, to);
        const Mat k = tube.stabilizer;
        const AlgebraVector eta(k * (k.transpose() * sr.xi.coords));
        const VectorFieldHandle aug = augment_field(rec.action, hamiltonian_field(rec), eta);
        const SliceField y = project_P(tube, aug);
        const Vec v0 = tube.slice_dim() > 0 ? perturbation(tube.slice_dim(), flags.seed + 5, 1e-3) : Vec(0);
        const Trajectory beta = integrate(y, v0, ic);
        const double A = flags.A_override.value_or(s.group().sup_vs_dual_constant());
        const CertificateReport cert = certificate_monitor(rec, tube, eta, beta.states, A);
        rep["certificate"] = {{"eta", to_json(eta.coords)},
                              {"A", A},
                              {"theta0", cert.theta0},
                              {"phi_margin", cert.phi_margin},
                              {"f_margin", cert.f_margin},
                              {"f_drift", cert.f_drift},
                              {"inequalities_hold", cert.inequalities_hold}};
    }

    const int samples = flags.samples < 0 ? 0 : flags.samples;
    if (samples > 0) {
        require_invariants(model);
        const ProbeConfig pc = probe_config(flags, samples);
        const ProbeResult pr = stability_probe(hamiltonian_field(s).field, m, model.invariants, pc);
        rep["probe"] = probe_json(pr, pc);
    }

    CommandResult out;
    out.report = rep.dump(2) + "\n";
    out.exit_code = sr.verdict == Verdict::StableModGmu ? 0 : 2;
    out.text = std::string(to_string(sr.verdict)) + " (" + std::string(to_string(sr.cls)) + ")\n";
    return out;
}

CommandResult cmd_simulate(const std::string &model_path, const std::string &point, const CommandFlags &flags)
{
    const Model model = load_model(model_path);
    const HamiltonianSystem &s = *model.system;
    const Vec &m = model.point(point);
    const int d = s.group().dim();
    Vec eta = Vec::Zero(d);
    if (flags.field.rfind("h_aug:", 0) == 0) {
        std::stringstream ss(flags.field.substr(6));
        std::string item;
        int i = 0;
        while (std::getline(ss, item, ',')) {
            if (i >= d) {
                fail(ErrorCode::InvalidModel, "h_aug velocity has more than " + std::to_string(d) + " entries");
            }
            eta(i++) = std::stod(item);
        }
        if (i != d) {
            fail(ErrorCode::InvalidModel, "h_aug velocity needs " + std::to_string(d) + " entries");
        }
    } else if (flags.field != "h") {
        fail(ErrorCode::InvalidModel, "field must be 'h' or 'h_aug:<xi>'");
    }
    IntegratorConfig ic;
    ic.step = flags.step;
    ic.horizon = flags.horizon;
    const VectorFieldHandle xh = hamiltonian_field(s);
    const FieldFn field = eta.isZero(0.0) ? xh.field : augment_field(s.action, xh, AlgebraVector(eta)).field;

    CommandResult out;
    std::string csv = csv_header(model) + csv_row(model, 0.0, m);
    const double h0 = s.h.eval(m);
    const double p0 = phi_norm_sq(s, m);
    double drift_h = 0.0, drift_phi2 = 0.0;
    long rows = 1;
    bool blew = false;
    double stop = 0.0;
    integrate_observed(
        field, m, ic,
        [&](double t, const Vec &x) {
            csv += csv_row(model, t, x);
            drift_h = std::max(drift_h, std::abs(s.h.eval(x) - h0));
            drift_phi2 = std::max(drift_phi2, std::abs(phi_norm_sq(s, x) - p0));
            ++rows;
            return true;
        },
        &blew, &stop);
    ojson rep = header(model, flags);
    rep["simulate"] = {{"point", point_name(model, point)},   {"field", flags.field}, {"step", ic.step},   {"horizon", ic.horizon},
                       {"rows", rows},     {"drift_h", drift_h},   {"drift_phi2", drift_phi2},
                       {"early_stop", blew}, {"stop_time", stop}};
    out.report = rep.dump(2) + "\n";
    out.csv = std::move(csv);
    out.text = "drift_h=" + fmt(drift_h) + (drift_h < 1e-6 ? " (<1e-6)" : " (>=1e-6)") +
               " drift_phi2=" + fmt(drift_phi2) + " rows=" + std::to_string(rows) +
               " early_stop=" + (blew ? "true" : "false") + "\n";
    out.exit_code = 0;
    return out;
}

CommandResult cmd_probe(const std::string &model_path, const std::string &point, const CommandFlags &flags)
{
    const Model model = load_model(model_path);
    const HamiltonianSystem &s = *model.system;
    const Vec &m = model.point(point);
    require_invariants(model);
    const int samples = flags.samples < 0 ? 64 : flags.samples;
    const ProbeConfig pc = probe_config(flags, samples);
    const VectorFieldHandle xh = hamiltonian_field(s);
    const ProbeResult pr = stability_probe(xh.field, m, model.invariants, pc);
    ojson rep = header(model, flags);
    rep["point"] = {{"name", point_name(model, point)}, {"coords", to_json(m)}};
    rep["probe"] = probe_json(pr, pc);
    CommandResult out;
    out.report = rep.dump(2) + "\n";
    if (pr.witness) {
        // Replay the witness up to its escape time.
        IntegratorConfig ic;
        ic.step = pc.step;
        ic.horizon = std::max(pc.step, pr.witness->time);
        std::string csv = csv_header(model) + csv_row(model, 0.0, pr.witness->initial);
        try {
            integrate_observed(xh.field, pr.witness->initial, ic, [&](double t, const Vec &x) {
                csv += csv_row(model, t, x);
                return true;
            });
        } catch (const Error &) {
            // The witness may end in a singularity; keep the rows written so far.
        }
        out.csv = std::move(csv);
    }
    const char *verdict = pr.escaped ? "Escaped" : "NoEscapeObserved";
    out.text = std::string(verdict) + (pr.vacuous ? " (vacuous: no samples)" : "") + "\n";
    out.exit_code = pr.escaped ? 2 : 0;
    return out;
}

} // namespace equistab
