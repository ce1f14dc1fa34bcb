#include <cmath>
#include <cstdlib>

#include "doctest.h"

#include "equistab/dynamics.hpp"
#include "equistab/error.hpp"
#include "support.hpp"

using namespace equistab;
using test::vec;

namespace {

Vec rotate(const Vec &y)
{
    return vec({-y(1), y(0)});
}

InvariantCoordinates radial_inv(int n)
{
    return InvariantCoordinates{{Expression::parse("x1^2 + x2^2", n)}};
}

InvariantCoordinates kepler_inv()
{
    return InvariantCoordinates{{Expression::parse("x1^2 + x2^2", 4), Expression::parse("x3^2 + x4^2", 4),
                                 Expression::parse("x1*x3 + x2*x4", 4), Expression::parse("x1*x4 - x2*x3", 4)}};
}

} // namespace

TEST_CASE("integrator basics")
{
    IntegratorConfig cfg;
    cfg.step = 0.1;
    cfg.horizon = 2.0;
    const Vec m0 = vec({0.3, -1.0, 2.0});
    const Trajectory still = integrate([](const Vec &y) { return Vec(Vec::Zero(y.size())); }, m0, cfg);
    CHECK(still.states.size() == 21);
    CHECK(still.times.size() == still.states.size());
    for (const Vec &s : still.states) {
        CHECK(s == m0);
    }
    for (std::size_t i = 1; i < still.times.size(); ++i) {
        CHECK(std::abs(still.times[i] - still.times[i - 1] - 0.1) <= 1e-15);
    }

    cfg.step = 1e-3;
    cfg.horizon = 100.0;
    const Trajectory circle =
        integrate(rotate, vec({1, 0}), cfg, {{"r", [](const Vec &y) { return y.norm(); }}});
    double worst = 0.0;
    for (double r : circle.logs.at("r")) {
        worst = std::max(worst, std::abs(r - 1.0));
    }
    CHECK(worst <= 1e-9);
    CHECK(std::abs(circle.states.back()(0) - std::cos(100.0)) <= 1e-9);
    CHECK_FALSE(circle.blew_up);

    cfg.step = 0.5;
    cfg.horizon = 0.25;
    CHECK_THROWS_AS(integrate(rotate, vec({1, 0}), cfg), Error);
}

TEST_CASE("integrator is fourth order")
{
    auto endpoint_error = [](double step) {
        IntegratorConfig cfg;
        cfg.step = step;
        cfg.horizon = 10.0;
        const Trajectory tr = integrate(rotate, vec({1, 0}), cfg);
        return (tr.states.back() - vec({std::cos(10.0), std::sin(10.0)})).norm();
    };
    const double ratio = endpoint_error(0.1) / endpoint_error(0.05);
    CHECK(ratio >= 16.0 * 0.8);
    CHECK(ratio <= 16.0 * 1.2);
}

TEST_CASE("blowup guard and non-finite states")
{
    IntegratorConfig cfg;
    cfg.step = 1e-2;
    cfg.horizon = 100.0;
    cfg.blowup_guard = 1e3;
    const Trajectory tr = integrate([](const Vec &y) { return Vec(y); }, vec({1.0}), cfg);
    CHECK(tr.blew_up);
    CHECK(tr.stop_time < 10.0);
    CHECK(tr.stop_time > 5.0);

    cfg.blowup_guard = 1e300;
    try {
        integrate([](const Vec &y) { return Vec(y.array().square() * 1e200); }, vec({1.0}), cfg);
        FAIL("expected NonFiniteState");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NonFiniteState);
    }
}

TEST_CASE("orbit distance")
{
    const InvariantCoordinates inv = radial_inv(2);
    const Vec p = vec({0.6, -0.8});
    CHECK(orbit_distance(inv, p, p) == 0.0);
    CHECK(std::abs(orbit_distance(inv, vec({1, 0}), vec({0, 1.1})) - 0.21) <= 1e-12);

    const Model kep = test::load_demo("kepler.json");
    const LieGroup &g = kep.system->group();
    Sampler rng(5);
    for (int i = 0; i < 50; ++i) {
        const Vec q = rng.normal(4);
        const GroupElement a = g.exp(AlgebraVector(rng.normal(1, 3.0)));
        CHECK(orbit_distance(kep.invariants, q, kep.system->action.act(a, q)) <= 1e-10);
    }
}

TEST_CASE("conservation along the three fields")
{
    const HamiltonianSystem k = test::kepler();
    const Vec m0 = vec({1, 0, 0, 0.6});
    IntegratorConfig fine;
    fine.step = 1e-3;
    fine.horizon = 100.0;
    IntegratorConfig half = fine;
    half.step = 5e-4;

    const AlgebraVector zero(vec({0}));
    const AlgebraVector eta(vec({0.37}));
    for (const auto &[variant, e] : {std::pair{FieldVariant::Hamiltonian, zero}, std::pair{FieldVariant::Augmented, eta}}) {
        const ConservationReport a = conservation_report(k, variant, e, m0, fine);
        const ConservationReport b = conservation_report(k, variant, e, m0, half);
        CHECK(a.drift_h <= 1e-6);
        CHECK(a.drift_phi2 <= 1e-6);
        CHECK(a.drift_h >= 8.0 * b.drift_h);
        CHECK(a.drift_phi2 >= 8.0 * b.drift_phi2);
        CHECK(a.steps == 100000);
    }

    // eta = 0 is the Hamiltonian case to the last bit
    IntegratorConfig shortc;
    shortc.step = 1e-2;
    shortc.horizon = 5.0;
    const ConservationReport h0 = conservation_report(k, FieldVariant::Hamiltonian, zero, m0, shortc);
    const ConservationReport a0 = conservation_report(k, FieldVariant::Augmented, zero, m0, shortc);
    CHECK(h0.drift_h == a0.drift_h);
    CHECK(h0.drift_phi2 == a0.drift_phi2);
}

TEST_CASE("conservation along the vertical field")
{
    const HamiltonianSystem k = test::kepler();
    const TubeModel tube = build_tube(k.action, vec({1, 0, 0, 1}));
    REQUIRE(tube.slice_dim() == 3);
    Vec v0 = Vec::Zero(3);
    v0(2) = -0.4;
    IntegratorConfig cfg;
    cfg.step = 1e-3;
    cfg.horizon = 30.0;
    IntegratorConfig half = cfg;
    half.step = 5e-4;
    const AlgebraVector zero(vec({0}));
    const ConservationReport a = conservation_report(k, FieldVariant::VerticalAugmented, zero, v0, cfg, &tube);
    const ConservationReport b = conservation_report(k, FieldVariant::VerticalAugmented, zero, v0, half, &tube);
    CHECK(a.drift_h <= 1e-6);
    CHECK(a.drift_phi2 <= 1e-6);
    CHECK(a.drift_h >= 8.0 * b.drift_h);

    CHECK_THROWS_AS(conservation_report(k, FieldVariant::VerticalAugmented, zero, v0, cfg), Error);
    // the stabilizer of a circular orbit is trivial, so any eta != 0 is rejected
    CHECK_THROWS_AS(conservation_report(k, FieldVariant::VerticalAugmented, AlgebraVector(vec({0.2})), v0, cfg, &tube),
                    Error);
}

TEST_CASE("stability probe")
{
    ProbeConfig pc;
    pc.eps = 1e-2;
    pc.deltas = {1e-3};
    pc.n_samples = 6;
    pc.horizon = 50.0;
    pc.step = 1e-2;

    const InvariantCoordinates inv = radial_inv(2);
    const ProbeResult still = stability_probe([](const Vec &y) { return Vec(Vec::Zero(y.size())); }, vec({1, 0}), inv, pc);
    CHECK_FALSE(still.escaped);
    CHECK_FALSE(still.witness.has_value());
    REQUIRE(still.per_delta.size() == 1);
    CHECK(still.per_delta[0].max_distance <= 1e-3);

    const HamiltonianSystem k = test::kepler();
    const ProbeResult kp = stability_probe(hamiltonian_field(k).field, vec({1, 0, 0, 1}), kepler_inv(), pc);
    CHECK_FALSE(kp.escaped);

    const Model un = test::load_demo("unstable.json");
    ProbeConfig upc = pc;
    upc.deltas = {1e-2, 1e-3};
    const ProbeResult up = stability_probe(hamiltonian_field(*un.system).field, un.point("circular"), un.invariants, upc);
    CHECK(up.escaped);
    REQUIRE(up.witness.has_value());
    CHECK(up.witness->time > 0.0);
    CHECK(up.witness->time < upc.horizon);
    CHECK(up.witness->delta == 1e-3);
    CHECK(orbit_distance(un.invariants, up.witness->initial, un.point("circular")) <= 1e-3);
    CHECK(up.per_delta.size() == 2);
    CHECK(up.per_delta[0].delta == 1e-2);

    ProbeConfig none = pc;
    none.n_samples = 0;
    const ProbeResult vac = stability_probe(hamiltonian_field(k).field, vec({1, 0, 0, 1}), kepler_inv(), none);
    CHECK(vac.vacuous);
    CHECK_FALSE(vac.escaped);
}

TEST_CASE("probe determinism across thread counts")
{
    const Model un = test::load_demo("unstable.json");
    ProbeConfig pc;
    pc.n_samples = 5;
    pc.horizon = 20.0;
    pc.seed = 9;
    pc.threads = 1;
    const FieldFn x = hamiltonian_field(*un.system).field;
    const ProbeResult a = stability_probe(x, un.point("circular"), un.invariants, pc);
    pc.threads = 3;
    const ProbeResult b = stability_probe(x, un.point("circular"), un.invariants, pc);
    REQUIRE(a.witness.has_value());
    REQUIRE(b.witness.has_value());
    CHECK(a.witness->sample == b.witness->sample);
    CHECK(a.witness->time == b.witness->time);
    CHECK(a.witness->initial == b.witness->initial);
    CHECK(a.per_delta[0].escaped == b.per_delta[0].escaped);
    CHECK(a.per_delta[0].max_distance == b.per_delta[0].max_distance);
    pc.seed = 10;
    const ProbeResult c = stability_probe(x, un.point("circular"), un.invariants, pc);
    REQUIRE(c.witness.has_value());
    CHECK(c.witness->initial != a.witness->initial);

    setenv("EQUISTAB_THREADS", "2", 1);
    CHECK(probe_thread_count(8) == 2);
    CHECK(probe_thread_count(1) == 1);
    unsetenv("EQUISTAB_THREADS");
    CHECK(probe_thread_count(8) == 8);
}

TEST_CASE("isomorphic flows share the orbit flow")
{
    const Model osc = test::load_demo("oscillator.json");
    const HamiltonianSystem &s = *osc.system;
    const VectorFieldHandle xh = hamiltonian_field(s);
    const Vec m0 = vec({1.1, 0.2});
    IntegratorConfig cfg;
    cfg.step = 1e-3;
    cfg.horizon = 50.0;

    CHECK(isomorphic_flow_check(xh.field, xh.field, osc.invariants, m0, cfg).max_orbit_discrepancy == 0.0);

    const VectorFieldHandle aug = augment_field(s.action, xh, AlgebraVector(vec({0.8})));
    const FlowComparison fc = isomorphic_flow_check(xh.field, aug.field, osc.invariants, m0, cfg);
    CHECK(fc.max_orbit_discrepancy <= 1e-6);
    CHECK(fc.steps == 50000);

    const FieldFn shifted = [&](const Vec &y) { return Vec(xh(y) + vec({0.5, 0})); };
    CHECK(isomorphic_flow_check(xh.field, shifted, osc.invariants, m0, cfg).max_orbit_discrepancy > 0.1);
}

TEST_CASE("certificate monitor")
{
    const HamiltonianSystem k = test::kepler();
    const Vec m = vec({1, 0, 0, 1});
    const HamiltonianSystem rec = k.recentered(m);
    const TubeModel tube = build_tube(rec.action, m);
    const AlgebraVector eta(vec({0}));
    const double A = rec.group().sup_vs_dual_constant();

    const std::vector<Vec> origin(5, Vec::Zero(tube.slice_dim()));
    const CertificateReport z = certificate_monitor(rec, tube, eta, origin, A, 0.0);
    CHECK(std::abs(z.theta0) <= 1e-15);
    CHECK(std::abs(z.phi_margin) <= 1e-15);
    CHECK(std::abs(z.f_margin) <= 1e-15);
    CHECK(z.inequalities_hold);

    const SliceField y = project_P(tube, augment_field(rec.action, hamiltonian_field(rec), eta));
    IntegratorConfig cfg;
    cfg.step = 1e-2;
    cfg.horizon = 50.0;
    Sampler rng(12);
    const Vec v0 = rng.unit(3) * 1e-3;
    const Trajectory beta = integrate(y, v0, cfg);
    const CertificateReport c = certificate_monitor(rec, tube, eta, beta.states, A, 1e-6);
    CHECK(c.inequalities_hold);
    CHECK(c.f_conserved);
    CHECK(c.f_drift <= 1e-9);

    // dissipation keeps the momentum bound but destroys conservation of f
    const SliceField lossy = [&](const Vec &v) { return Vec(y(v) - 0.01 * v); };
    const Trajectory damped = integrate(lossy, rng.unit(3) * 0.05, cfg);
    const CertificateReport d = certificate_monitor(rec, tube, eta, damped.states, A, 1e-6);
    CHECK(d.phi_margin >= 0.0);
    CHECK_FALSE(d.f_conserved);
}

TEST_CASE("invariant separation heuristic")
{
    const HamiltonianSystem k = test::kepler();
    const Vec c = vec({1, 0, 0, 1});
    const SeparationReport full = invariant_separation(kepler_inv(), k.action, c, 0.3, 200, 32, 4);
    const InvariantCoordinates weak{{Expression::parse("x1^2 + x2^2 + x3^2 + x4^2", 4)}};
    const SeparationReport poor = invariant_separation(weak, k.action, c, 0.3, 200, 32, 4);
    CHECK(full.pairs > 100);
    CHECK(full.pairs == poor.pairs);
    CHECK(full.min_invariant_distance > 0.02);
    // a single radius cannot tell orbits apart
    CHECK(poor.min_invariant_distance < 0.2 * full.min_invariant_distance);
}
