#include "equistab/mgs.hpp"

#include <cmath>
#include <string>

#include "equistab/error.hpp"
#include "equistab/slice.hpp"

namespace equistab {

MGSData mgs_data(const HamiltonianSystem &s, const Vec &m, double tol)
{
    const Characterization ch = characterize(s, m, tol);
    if (!ch.is_rel_eq) {
        fail(ErrorCode::NotRelativeEquilibrium, "normal form requested away from a relative equilibrium");
    }
    if (ch.mu.coords.norm() > tol) {
        fail(ErrorCode::NonzeroMoment, "momentum at the point is " + std::to_string(ch.mu.coords.norm()) +
                                           ", the normal form needs zero moment");
    }
    const LieGroup &g = s.group();
    const int d = g.dim();
    MGSData out;
    const OrbitTangent ot = orbit_tangent(s.action, m);
    out.K_basis = ot.stabilizer_basis;
    out.orbit_dim = static_cast<int>(ot.orbit_basis.cols());
    const auto ann = g.annihilator(as_algebra_vectors(out.K_basis));
    out.k0_basis = Mat(d, static_cast<Eigen::Index>(ann.size()));
    for (std::size_t i = 0; i < ann.size(); ++i) {
        out.k0_basis.col(static_cast<Eigen::Index>(i)) = ann[i].coords;
    }
    out.split = g.orthogonal_splitting(as_algebra_vectors(out.K_basis));

    const ComplementBasis comp = slice_complement(s, m);
    out.W_basis = comp.W_basis;
    const Mat &b = out.W_basis;
    out.omega_W = b.transpose() * s.omega.omega() * b;
    if (b.cols() > 0 && condition_number(out.omega_W) > 1e8) {
        fail(ErrorCode::SingularOmega, "induced form on the symplectic slice is degenerate");
    }
    for (Eigen::Index k = 0; k < out.K_basis.cols(); ++k) {
        const Mat r = s.action.rep_matrix(AlgebraVector(out.K_basis.col(k)));
        out.K_rep_on_W.push_back(b.transpose() * r * b);
    }
    if (!out.K_rep_on_W.empty()) {
        out.PhiW = quadratic_momentum(out.K_rep_on_W, out.omega_W);
    }
    const TubeModel tube = build_tube(s.action, m);
    out.k0_radius = tube.radius;
    out.W_radius = tube.radius;
    return out;
}

CoalgebraVector iota_embed(const Splitting &split, const Vec &rho)
{
    const Mat k = split.sub_matrix();
    const Eigen::Index d = split.projector.rows();
    if (rho.size() != k.cols()) {
        fail(ErrorCode::DimensionMismatch, "rho has " + std::to_string(rho.size()) + " values for a " +
                                               std::to_string(k.cols()) + "-dimensional subalgebra");
    }
    if (k.cols() == 0) {
        return CoalgebraVector(Vec::Zero(d));
    }
    const Mat coords = k.completeOrthogonalDecomposition().pseudoInverse() * split.projector;
    return CoalgebraVector(coords.transpose() * rho);
}

CoalgebraVector mgs_momentum(const MGSData &d, const LieGroup &group, const GroupElement &g, const Vec &rho,
                             const Vec &w)
{
    if (rho.size() != d.k0_basis.cols() || w.size() != d.W_basis.cols()) {
        fail(ErrorCode::DimensionMismatch, "normal-form coordinates have wrong length");
    }
    if (rho.norm() >= d.k0_radius || w.norm() >= d.W_radius) {
        fail(ErrorCode::OutOfChart, "normal-form coordinates outside the chart radii");
    }
    Vec phiw(static_cast<Eigen::Index>(d.PhiW.size()));
    for (std::size_t i = 0; i < d.PhiW.size(); ++i) {
        phiw(static_cast<Eigen::Index>(i)) = d.PhiW[i].eval(w);
    }
    const Vec inner = d.k0_basis * rho + iota_embed(d.split, phiw).coords;
    return group.coadjoint(g, CoalgebraVector(inner));
}

ReductionReport reduction_check(const HamiltonianSystem &s, const Vec &m, const AlgebraVector &xi, const Mat &U,
                                const MGSData &d)
{
    ReductionReport out;
    out.on_U = definiteness(restricted_hessian(s, m, xi, U));
    out.on_mgs_W = definiteness(restricted_hessian(s, m, xi, d.W_basis));
    out.classes_equal = out.on_U.cls == out.on_mgs_W.cls;
    return out;
}

ShadowReport mgs_shadow_check(const HamiltonianSystem &s, const Vec &m, const MGSData &d, int n_samples,
                              std::uint64_t seed)
{
    Sampler rng(seed);
    ShadowReport out;
    const Eigen::Index w_dim = d.W_basis.cols();
    for (int k = 0; k < n_samples; ++k) {
        const Vec w = w_dim > 0 ? Vec(rng.unit(w_dim) * (0.5 * d.W_radius * rng.uniform())) : Vec(0);
        const Vec p = m + d.W_basis * w;
        const Vec phi = s.phi(p).coords;
        for (std::size_t j = 0; j < d.PhiW.size(); ++j) {
            const double lhs = phi.dot(d.K_basis.col(static_cast<Eigen::Index>(j)));
            const double rhs = d.PhiW[j].eval(w);
            out.max_violation = std::max(out.max_violation, std::abs(lhs - rhs));
        }
        ++out.samples;
    }
    return out;
}

} // namespace equistab
