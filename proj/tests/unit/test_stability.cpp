#include <cmath>

#include "doctest.h"

#include "equistab/error.hpp"
#include "equistab/stability.hpp"
#include "support.hpp"

using namespace equistab;
using test::vec;

namespace {

HamiltonianSystem plane(const std::string &h)
{
    const LinearGAction a = LinearGAction::catalog(LieGroup::catalog("SO2"), "standard");
    const SymplecticStructure w = SymplecticStructure::named("canonical", 2);
    return HamiltonianSystem(a, w, Expression::parse(h, 2), quadratic_momentum(a, w));
}

HamiltonianSystem torus_modes(const std::string &h)
{
    const LinearGAction a = LinearGAction::catalog(LieGroup::catalog("T2"), "standard");
    const SymplecticStructure w = SymplecticStructure::named("pairs", 4);
    return HamiltonianSystem(a, w, Expression::parse(h, 4), quadratic_momentum(a, w));
}

Mat diag(std::initializer_list<double> d)
{
    const Vec v = vec(d);
    return v.asDiagonal();
}

// Effective potential oracle for a circular orbit at r = 1 of h = |p|^2/2 + V(r):
// with W spanned by (1,0,0,-p)/|.| and (0,1,1,0)/sqrt(2), p^2 = V'(1), the
// restricted Hessian is diag(V_eff''(1) / (1 + V'(1)), 1 + V'(1)).
Vec circular_oracle(double v1, double v2)
{
    const double veff2 = v2 + 3.0 * v1;
    Vec out = vec({veff2 / (1 + v1), 1 + v1});
    std::sort(out.data(), out.data() + 2);
    return out;
}

} // namespace

TEST_CASE("characterize examples")
{
    const HamiltonianSystem fixed = plane("0.5*(x1^2+x2^2)");
    const Characterization c0 = characterize(fixed, vec({0, 0}));
    CHECK(c0.is_rel_eq);
    CHECK(c0.xi.coords.norm() == 0.0);
    CHECK(c0.residual_field <= 1e-12);
    CHECK(c0.residual_critical <= 1e-12);

    const HamiltonianSystem osc = plane("0.5*(x1^2+x2^2) + (x1^2+x2^2)^2");
    const Characterization c1 = characterize(osc, vec({1, 0}));
    CHECK(c1.is_rel_eq);
    CHECK(c1.is_critical);
    CHECK(augmented_hamiltonian(osc, c1.xi).gradient(vec({1, 0})).norm() <= 1e-9);

    const HamiltonianSystem k = test::kepler();
    const Characterization c2 = characterize(k, vec({1.1, 0, 0.2, 0.8}));
    CHECK_FALSE(c2.is_rel_eq);
    CHECK_FALSE(c2.is_critical);
    CHECK(c2.residual_field > 1e-6);
    CHECK(c2.residual_critical > 1e-6);
}

TEST_CASE("field and critical residuals agree across perturbations")
{
    const HamiltonianSystem k = test::kepler();
    Sampler rng(1);
    int disagreements = 0;
    for (int i = 0; i < 200; ++i) {
        const double scale = std::pow(10.0, -2 - 10 * rng.uniform());
        const Vec m = vec({1, 0, 0, 1}) + rng.normal(4, scale);
        const Characterization c = characterize(k, m);
        // decisions closer than 10x to the threshold are not counted
        const double thr = 1e-9 * (1 + hamiltonian_field(k)(m).norm());
        if (c.residual_field > 10 * thr || c.residual_field < thr / 10) {
            disagreements += c.is_rel_eq != c.is_critical;
        }
    }
    CHECK(disagreements == 0);
}

TEST_CASE("moment isotropy examples")
{
    const LieGroup so3 = LieGroup::catalog("SO3");
    CHECK(moment_isotropy_algebra(so3, CoalgebraVector(Vec::Zero(3))).cols() == 3);
    CHECK(moment_isotropy_algebra(LieGroup::catalog("T3"), CoalgebraVector(vec({1, -2, 3}))).cols() == 3);
    const Mat g = moment_isotropy_algebra(so3, CoalgebraVector(vec({0, 0, 1})));
    REQUIRE(g.cols() == 1);
    CHECK(std::abs(std::abs(g(2, 0)) - 1.0) < 1e-12);
}

TEST_CASE("slice complement examples")
{
    const HamiltonianSystem osc = plane("0.5*(x1^2+x2^2)");
    const ComplementBasis c = slice_complement(osc, vec({1, 0}));
    CHECK(c.kernel_basis.cols() == 1);
    CHECK(c.orbit_mu_basis.cols() == 1);
    CHECK(c.W_basis.cols() == 0);

    const HamiltonianSystem k = test::kepler();
    const ComplementBasis ck = slice_complement(k, vec({1, 0, 0, 1}));
    CHECK(ck.kernel_basis.cols() == 3);
    CHECK(ck.orbit_mu_basis.cols() == 1);
    CHECK(ck.W_basis.cols() == 2);
    CHECK((ck.W_basis.transpose() * ck.orbit_mu_basis).norm() < 1e-12);
    CHECK((k.dphi(vec({1, 0, 0, 1})) * ck.W_basis).norm() < 1e-12);

    const ComplementBasis c0 = slice_complement(k, Vec::Zero(4));
    CHECK(c0.kernel_basis.cols() == 4);
    CHECK(c0.orbit_mu_basis.cols() == 0);
    CHECK(c0.W_basis.cols() == 4);

    // so(3) lift with a non-fixed moment: W is invariant under the stabilizer
    const LinearGAction lift = LinearGAction::catalog(LieGroup::catalog("SO3"), "cotangent_lift");
    const SymplecticStructure w6 = SymplecticStructure::named("canonical", 6);
    const HamiltonianSystem rigid(lift, w6, Expression::parse("0.5*(x4^2+x5^2+x6^2) - 1/sqrt(x1^2+x2^2+x3^2)", 6),
                                  quadratic_momentum(lift, w6));
    const Vec m = vec({1, 0, 0, 0, 1, 0});
    const ComplementBasis cr = slice_complement(rigid, m);
    CHECK(cr.kernel_basis.cols() == cr.orbit_mu_basis.cols() + cr.W_basis.cols());
    const OrbitTangent ot = orbit_tangent(lift, m);
    for (Eigen::Index j = 0; j < ot.stabilizer_basis.cols(); ++j) {
        const Mat moved = lift.rep_matrix(AlgebraVector(ot.stabilizer_basis.col(j))) * cr.W_basis;
        CHECK((moved - cr.W_basis * (cr.W_basis.transpose() * moved)).norm() < 1e-10);
    }
}

TEST_CASE("restricted hessian examples")
{
    const HamiltonianSystem q = torus_modes("0.5*(x1^2+x2^2) + 1.5*(x3^2+x4^2) + x1*x3");
    Mat expect = Mat::Zero(4, 4);
    expect(0, 0) = expect(1, 1) = 1;
    expect(2, 2) = expect(3, 3) = 3;
    expect(0, 2) = expect(2, 0) = 1;
    CHECK((restricted_hessian(q, Vec::Zero(4), AlgebraVector(Vec::Zero(2)), Mat::Identity(4, 4)) - expect).norm() <
          1e-14);

    const HamiltonianSystem k = test::kepler();
    const Vec m = vec({1, 0, 0, 1});
    const Characterization c = characterize(k, m);
    const ComplementBasis cb = slice_complement(k, m);
    const Mat h = restricted_hessian(k, m, c.xi, cb.W_basis);
    CHECK((h - h.transpose()).norm() == 0.0);
    const DefinitenessResult d = definiteness(h);
    CHECK(d.cls == Definiteness::PositiveDefinite);
    // V = -1/r: V'(1) = 1, V''(1) = -2
    const Vec oracle = circular_oracle(1.0, -2.0);
    CHECK(test::rel_err(d.eigenvalues(0), oracle(0)) <= 1e-8);
    CHECK(test::rel_err(d.eigenvalues(1), oracle(1)) <= 1e-8);

    // V = -1/r^3: V'(1) = 3, V''(1) = -12
    const HamiltonianSystem u = test::central_force("(-1/sqrt(x1^2 + x2^2)^3)");
    const Vec mu = vec({1, 0, 0, std::sqrt(3.0)});
    const Characterization cu = characterize(u, mu);
    REQUIRE(cu.is_rel_eq);
    const DefinitenessResult du = definiteness(restricted_hessian(u, mu, cu.xi, slice_complement(u, mu).W_basis));
    CHECK(du.cls == Definiteness::Indefinite);
    const Vec ou = circular_oracle(3.0, -12.0);
    CHECK(test::rel_err(du.eigenvalues(0), ou(0)) <= 1e-8);
    CHECK(test::rel_err(du.eigenvalues(1), ou(1)) <= 1e-8);

    try {
        restricted_hessian(k, m, AlgebraVector(vec({0.5})), cb.W_basis);
        FAIL("expected HessianIllDefined");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::HessianIllDefined);
    }
}

TEST_CASE("definiteness examples")
{
    CHECK(definiteness(Mat::Identity(3, 3)).cls == Definiteness::PositiveDefinite);
    CHECK(definiteness(-Mat::Identity(2, 2)).cls == Definiteness::NegativeDefinite);
    CHECK(definiteness(diag({1, -1})).cls == Definiteness::Indefinite);
    CHECK(definiteness(diag({1, 1e-15})).cls == Definiteness::Degenerate);
    CHECK(definiteness(Mat(0, 0)).cls == Definiteness::Degenerate);
    CHECK(definiteness(diag({1, 1e-3}), 1e-2).cls == Definiteness::Degenerate);
    Mat asym(2, 2);
    asym << 1, 2, 0, 1;
    try {
        definiteness(asym);
        FAIL("expected NotSymmetric");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NotSymmetric);
    }
    // class is unchanged by an orthogonal change of basis
    Sampler rng(4);
    for (int i = 0; i < 50; ++i) {
        const Mat a = rng.normal(4, 4, 1.0);
        const Mat s = a + a.transpose();
        const Eigen::HouseholderQR<Mat> qr(rng.normal(4, 4, 1.0));
        const Mat q = qr.householderQ();
        CHECK(definiteness(s).cls == definiteness(Mat(q.transpose() * s * q)).cls);
    }
}

TEST_CASE("verdicts")
{
    const HamiltonianSystem k = test::kepler();
    const StabilityReport r = mro_verdict(k, vec({1, 0, 0, 1}));
    CHECK(r.verdict == Verdict::StableModGmu);
    CHECK(r.cls == Definiteness::PositiveDefinite);
    CHECK(r.W_dim == 2);
    CHECK(r.freedom_dim == 0);
    CHECK(r.trace.size() == 1);

    const HamiltonianSystem u = test::central_force("(-1/sqrt(x1^2 + x2^2)^3)");
    const StabilityReport ru = mro_verdict(u, vec({1, 0, 0, std::sqrt(3.0)}));
    CHECK(ru.verdict == Verdict::Inconclusive);
    CHECK(ru.cls == Definiteness::Indefinite);

    // W = {0}: conservative Degenerate report
    const HamiltonianSystem osc = plane("0.5*(x1^2+x2^2) + (x1^2+x2^2)^2");
    const StabilityReport ro = mro_verdict(osc, vec({1, 0}));
    CHECK(ro.W_dim == 0);
    CHECK(ro.cls == Definiteness::Degenerate);
    CHECK(ro.verdict == Verdict::Inconclusive);

    try {
        mro_verdict(k, vec({1, 0, 0.3, 1}));
        FAIL("expected PreconditionFailed");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::PreconditionFailed);
    }
}

TEST_CASE("velocity search finds a definite member of the family")
{
    // counter-rotating modes: the bare Hessian at the origin is indefinite,
    // shifting the velocity into the second mode fixes the sign
    const HamiltonianSystem s = torus_modes("0.5*(x1^2+x2^2) - 0.5*(x3^2+x4^2)");
    CHECK(definiteness(restricted_hessian(s, Vec::Zero(4), AlgebraVector(Vec::Zero(2)), Mat::Identity(4, 4))).cls ==
          Definiteness::Indefinite);
    const StabilityReport r = mro_verdict(s, Vec::Zero(4));
    CHECK(r.freedom_dim == 2);
    CHECK(r.verdict == Verdict::StableModGmu);
    CHECK(r.trace.size() > 1);
    // every definite member gives the same verdict
    for (const SearchSample &smp : r.trace) {
        if (smp.cls == Definiteness::PositiveDefinite || smp.cls == Definiteness::NegativeDefinite) {
            const Mat h = restricted_hessian(s, Vec::Zero(4), AlgebraVector(smp.xi), Mat::Identity(4, 4));
            CHECK(definiteness(h).cls == smp.cls);
        }
    }
    StabilityConfig narrow;
    narrow.search_radius = 0.5;
    narrow.polish = false;
    CHECK(mro_verdict(s, Vec::Zero(4), narrow).verdict == Verdict::Inconclusive);
}

TEST_CASE("form lemma")
{
    Sampler rng(5);
    const Mat s = diag({2, -1});
    // V = R^3, U = span(e1) with T = blockdiag(0, S)
    Mat t = Mat::Zero(3, 3);
    t.bottomRightCorner(2, 2) = s;
    const Mat u = Mat(vec({1, 0, 0}));
    Mat w(3, 2);
    w << 0, 0, 1, 0, 0, 1;
    const FormLemmaReport same = restricted_form_lemma_check(t, u, w, w);
    CHECK(same.classes_equal);
    Mat wt = w;
    wt.col(0) += 3.0 * u.col(0);
    wt.col(1) -= 0.5 * u.col(0);
    const FormLemmaReport mixed = restricted_form_lemma_check(t, u, w, wt);
    CHECK(mixed.classes_equal);
    CHECK(mixed.on_W_tilde.cls == Definiteness::Indefinite);

    Mat bad = t;
    bad(0, 1) = bad(1, 0) = 0.3;
    try {
        restricted_form_lemma_check(bad, u, w, wt);
        FAIL("expected PreconditionFailed");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::PreconditionFailed);
    }
    // W~ not complementary to U
    Mat dep = w;
    dep.col(0) = u.col(0);
    CHECK_THROWS_AS(restricted_form_lemma_check(t, u, w, dep), Error);
}

TEST_CASE("complement independence")
{
    const HamiltonianSystem k = test::kepler();
    const Vec m = vec({1, 0, 0, 1});
    const AlgebraVector xi = characterize(k, m).xi;
    const ComplementTrialReport r = complement_independence_check(k, m, xi, 20, 3);
    CHECK(r.reference == Definiteness::PositiveDefinite);
    CHECK(r.classes.size() == 20);
    CHECK(r.all_agree);
    const ComplementTrialReport none = complement_independence_check(k, m, xi, 0, 3);
    CHECK(none.classes.empty());
    CHECK(none.all_agree);

    // potential with V''(1) + 3V'(1) = 0: the reference Hessian is singular
    const HamiltonianSystem flat = test::central_force("(-0.5/(x1^2 + x2^2))");
    const Vec mf = vec({1, 0, 0, 1});
    const AlgebraVector xf = characterize(flat, mf).xi;
    const ComplementTrialReport d = complement_independence_check(flat, mf, xf, 10, 4);
    CHECK(d.reference == Definiteness::Degenerate);
    CHECK(d.all_agree);
}

TEST_CASE("Morse branch examples")
{
    const MorseBranch quad = morse_branch(Expression::parse("x2^2 + x1*x2", 2), 1, 1);
    for (const Vec &rho : quad.rho_grid) {
        CHECK(std::abs(quad.sigma(rho)(0) + rho(0) / 2) <= 1e-12);
    }
    CHECK(quad.expansion_residual(0.1) <= 1e-12);

    const MorseBranch flat = morse_branch(Expression::parse("x2^2", 2), 1, 1);
    CHECK(std::abs(flat.sigma(vec({0.15}))(0)) <= 1e-14);

    const MorseBranch cubic = morse_branch(Expression::parse("x2^2 + x1*x2 + x2^3", 2), 1, 1);
    for (const Vec &rho : cubic.rho_grid) {
        const double s = cubic.sigma(rho)(0);
        // 2s + rho + 3 s^2 = 0
        CHECK(std::abs(2 * s + rho(0) + 3 * s * s) <= 1e-12);
        CHECK(std::abs(s + rho(0) / 2) <= rho(0) * rho(0));
    }
    const double r1 = cubic.expansion_residual(0.08), r2 = cubic.expansion_residual(0.04);
    CHECK(r1 / r2 == doctest::Approx(8.0).epsilon(0.25));

    // two-dimensional w block with coupling
    const MorseBranch two = morse_branch(Expression::parse("x2^2 + 2*x3^2 + x2*x3 + x1*(x2 - x3)", 3), 1, 2);
    CHECK(two.expansion_residual(0.1) <= 1e-12);

    try {
        morse_branch(Expression::parse("-x2^2 + x1*x2", 2), 1, 1);
        FAIL("expected NotPositiveDefinite");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NotPositiveDefinite);
    }
    CHECK_THROWS_AS(morse_branch(Expression::parse("x2^2 + x2 + x1", 2), 1, 1), Error);
}
