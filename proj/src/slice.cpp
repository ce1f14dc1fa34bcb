#include "equistab/slice.hpp"

#include <cmath>
#include <string>

#include "equistab/error.hpp"

namespace equistab {

Vec TubeModel::embed(const Vec &v) const
{
    if (v.size() != slice_basis.cols()) {
        fail(ErrorCode::DimensionMismatch, "slice coordinates have length " + std::to_string(v.size()) +
                                               ", slice has dimension " + std::to_string(slice_basis.cols()));
    }
    return base + slice_basis * v;
}

Mat TubeModel::split_matrix(const Vec &v) const
{
    const Vec p = embed(v);
    const Mat f = action->fundamental_matrix(p) * q_basis;
    Mat m(action->dim(), f.cols() + slice_basis.cols());
    m << f, slice_basis;
    return m;
}

namespace {

Vec random_in_ball(Sampler &rng, int n, double r)
{
    if (n == 0) {
        return Vec(0);
    }
    const Vec u = rng.unit(n);
    return u * (r * std::pow(rng.uniform(), 1.0 / n));
}

} // namespace

TubeModel build_tube(const LinearGAction &a, const Vec &m, const TubeOptions &options)
{
    if (!a.orthogonal() || a.skew_defect() > 1e-9) {
        fail(ErrorCode::InvalidAction, "tubes are built only for actions with orthogonal linear part");
    }
    if (m.size() != a.dim() || !m.allFinite()) {
        fail(ErrorCode::DimensionMismatch, "base point does not match the action dimension");
    }
    TubeModel t;
    t.action = std::make_shared<const LinearGAction>(a);
    t.base = m;
    t.cond_max = options.cond_max;
    const LieGroup &g = a.group();
    const int d = g.dim();
    const OrbitTangent ot = orbit_tangent(a, m);
    t.stabilizer = ot.stabilizer_basis;
    t.orbit_basis = ot.orbit_basis;
    if (options.complement) {
        const Mat &q = *options.complement;
        if (q.rows() != d || q.cols() != d - t.stabilizer.cols()) {
            fail(ErrorCode::DimensionMismatch, "complement must have d - dim g_m columns");
        }
        t.splitting = g.splitting(as_algebra_vectors(t.stabilizer), as_algebra_vectors(q));
    } else {
        t.splitting = g.orthogonal_splitting(as_algebra_vectors(t.stabilizer));
    }
    t.q_basis = t.splitting.comp_matrix();
    if (t.q_basis.cols() == 0) {
        t.q_basis = Mat(d, 0);
    }
    t.slice_basis = orthogonal_complement(t.orbit_basis, a.dim());
    if (t.slice_basis.cols() == 0) {
        t.slice_basis = Mat(a.dim(), 0);
    }

    // The slice must be g_m-invariant.
    const Mat proj_out = Mat::Identity(a.dim(), a.dim()) - t.slice_basis * t.slice_basis.transpose();
    for (Eigen::Index k = 0; k < t.stabilizer.cols(); ++k) {
        const Mat r = a.rep_matrix(AlgebraVector(t.stabilizer.col(k)));
        if ((proj_out * r * t.slice_basis).norm() > 1e-8 * (1.0 + r.norm())) {
            fail(ErrorCode::InvalidAction, "slice is not invariant under the stabilizer");
        }
    }

    // Shrink the radius until the split system is well conditioned.
    double r = options.radius_hint;
    if (!(r > 0.0)) {
        fail(ErrorCode::DimensionMismatch, "radius hint must be positive");
    }
    Sampler rng(options.seed);
    for (int attempt = 0; attempt < 60; ++attempt) {
        bool ok = condition_number(t.split_matrix(Vec::Zero(t.slice_dim()))) <= t.cond_max;
        for (int s = 0; s < options.gate_samples && ok; ++s) {
            ok = condition_number(t.split_matrix(random_in_ball(rng, t.slice_dim(), r))) <= t.cond_max;
        }
        if (ok) {
            t.radius = r;
            return t;
        }
        r *= 0.5;
    }
    fail(ErrorCode::IllConditioned, "orbit tangent and slice are not transverse at the base point");
}

TangentSplit split_tangent(const TubeModel &t, const Vec &v, const Vec &w)
{
    if (w.size() != t.action->dim()) {
        fail(ErrorCode::DimensionMismatch, "tangent vector has wrong length");
    }
    TangentSplit out;
    const Eigen::Index k = t.q_basis.cols();
    if (t.action->dim() == 0) {
        return out;
    }
    const Mat m = t.split_matrix(v);
    Eigen::ColPivHouseholderQR<Mat> qr(m);
    out.condition = condition_number(m);
    if (!(out.condition <= t.cond_max)) {
        fail(ErrorCode::IllConditioned, "split system condition number " + std::to_string(out.condition) +
                                            " exceeds " + std::to_string(t.cond_max));
    }
    const Vec sol = qr.solve(w);
    out.eta = AlgebraVector(t.q_basis * sol.head(k));
    out.u = sol.tail(t.slice_basis.cols());
    out.residual = (m * sol - w).norm();
    return out;
}

SliceField project_P(const TubeModel &t, const VectorFieldHandle &x)
{
    auto field = x.field;
    return [t, field](const Vec &v) -> Vec { return split_tangent(t, v, field(t.embed(v))).u; };
}

Vec tube_point(const TubeModel &t, const GroupElement &g, const Vec &v)
{
    return t.action->act(g, t.embed(v));
}

Vec extend_E(const TubeModel &t, const SliceField &y, const GroupElement &g, const Vec &v)
{
    const Vec yv = y(v);
    if (yv.size() != t.slice_basis.cols()) {
        fail(ErrorCode::DimensionMismatch, "slice field has wrong output length");
    }
    return t.action->linear_part(g) * (t.slice_basis * yv);
}

TubeGauge roundtrip_gauge(const TubeModel &t, const VectorFieldHandle &x)
{
    auto field = x.field;
    TubeGauge out;
    out.action = t.action;
    out.at_slice = [t, field](const Vec &v) -> AlgebraVector { return split_tangent(t, v, field(t.embed(v))).eta; };
    return out;
}

Vec vertical_part(const TubeModel &t, const VectorFieldHandle &x, const GroupElement &g, const Vec &v)
{
    const Vec p = tube_point(t, g, v);
    const AlgebraVector psi = roundtrip_gauge(t, x)(g, v);
    return x(p) - fundamental_field(*t.action, psi, p);
}

TransportReport transport_rel_eq_checks(const TubeModel &t, const VectorFieldHandle &x, double tol)
{
    TransportReport out;
    const VelocitySolution vel = solve_velocity(*t.action, x, t.base);
    out.velocity_residual = vel.residual;
    if (!vel.is_rel_eq) {
        fail(ErrorCode::NotRelativeEquilibrium, "base point is not a relative equilibrium (residual " +
                                                    std::to_string(vel.residual) + ")");
    }
    const Vec origin = Vec::Zero(t.slice_dim());
    const Vec p0 = project_P(t, x)(origin);
    out.projected_at_origin = p0.norm();
    // A stabilizer gauge adds the slice representation field, which vanishes at 0.
    out.gauged_at_origin = out.projected_at_origin;
    for (Eigen::Index k = 0; k < t.stabilizer.cols(); ++k) {
        const Vec kappa_m = fundamental_field(*t.action, AlgebraVector(t.stabilizer.col(k)), t.embed(origin));
        const Vec gauged = p0 + t.slice_basis.transpose() * kappa_m;
        out.gauged_at_origin = std::max(out.gauged_at_origin, gauged.norm());
    }
    const double scale = 1.0 + x(t.base).norm();
    out.passed = out.projected_at_origin <= tol * scale && out.gauged_at_origin <= tol * scale;
    return out;
}

Retraction retract(const TubeModel &t, const Vec &p, int n_starts, std::uint64_t seed)
{
    const LieGroup &g = t.action->group();
    const Eigen::Index k = t.q_basis.cols();
    auto pull_back = [&](const Vec &zeta) {
        const GroupElement ge = g.exp(AlgebraVector(t.q_basis * zeta));
        return t.action->act(g.inverse(ge), p);
    };
    auto resid = [&](const Vec &zeta) -> Vec { return t.orbit_basis.transpose() * (pull_back(zeta) - t.base); };

    Sampler rng(seed);
    Vec best = Vec::Zero(k);
    double best_dist = (pull_back(best) - t.base).norm();
    for (int s = 0; s < n_starts && k > 0; ++s) {
        const Vec z = rng.normal(k, 2.0);
        const double dist = (pull_back(z) - t.base).norm();
        if (dist < best_dist) {
            best_dist = dist;
            best = z;
        }
    }
    Vec zeta = best;
    Vec r = resid(zeta);
    for (int it = 0; it < 50 && k > 0 && r.norm() > 1e-13 * (1.0 + p.norm()); ++it) {
        Mat jac(r.size(), k);
        const double h = 1e-7;
        for (Eigen::Index i = 0; i < k; ++i) {
            Vec zp = zeta, zm = zeta;
            zp(i) += h;
            zm(i) -= h;
            jac.col(i) = (resid(zp) - resid(zm)) / (2.0 * h);
        }
        const Vec step = jac.completeOrthogonalDecomposition().solve(r);
        zeta -= step;
        r = resid(zeta);
    }
    Retraction out;
    out.g = g.exp(AlgebraVector(t.q_basis * zeta));
    const Vec local = pull_back(zeta) - t.base;
    out.v = t.slice_basis.transpose() * local;
    out.residual = r.size() > 0 ? r.norm() : 0.0;
    out.converged = out.residual <= 1e-9 * (1.0 + p.norm()) && out.v.norm() < t.radius;
    return out;
}

} // namespace equistab
