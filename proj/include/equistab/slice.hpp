#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "equistab/action.hpp"
#include "equistab/lie.hpp"

namespace equistab {

// Field on slice coordinates v in R^{dim S}.
using SliceField = std::function<Vec(const Vec &)>;

// Tube through m: j(v) = m + S v with S an orthonormal basis of the
// Euclidean complement of the orbit tangent, plus the splitting g = g_m (+) q.
struct TubeModel {
    std::shared_ptr<const LinearGAction> action;
    Vec base;
    Mat stabilizer;  // d x dim g_m
    Splitting splitting;
    Mat q_basis;     // d x dim q
    Mat orbit_basis; // N x dim orbit
    Mat slice_basis; // N x dim S
    double radius = 0.0;
    double cond_max = 1e6;

    int slice_dim() const { return static_cast<int>(slice_basis.cols()); }
    Vec embed(const Vec &v) const;
    // Square system [q_M(j(v)) | S] solved by split_tangent.
    Mat split_matrix(const Vec &v) const;
};

struct TangentSplit {
    AlgebraVector eta; // in q
    Vec u;             // slice coordinates
    double residual = 0.0;
    double condition = 1.0;
};

struct TubeOptions {
    double radius_hint = 0.5;
    double cond_max = 1e6;
    std::uint64_t seed = 11;
    int gate_samples = 32;
    // Complement q of g_m in algebra coordinates; defaults to the orthogonal one.
    std::optional<Mat> complement;
};

TubeModel build_tube(const LinearGAction &a, const Vec &m, const TubeOptions &options = {});

TangentSplit split_tangent(const TubeModel &t, const Vec &v, const Vec &w);
SliceField project_P(const TubeModel &t, const VectorFieldHandle &x);

// E(Y) at g . j(v).
Vec extend_E(const TubeModel &t, const SliceField &y, const GroupElement &g, const Vec &v);
Vec tube_point(const TubeModel &t, const GroupElement &g, const Vec &v);

// psi^X on tube points addressed as (g, v): Ad(g) of the q-part of X at j(v).
struct TubeGauge {
    std::function<AlgebraVector(const Vec &)> at_slice;
    std::shared_ptr<const LinearGAction> action;

    AlgebraVector operator()(const GroupElement &g, const Vec &v) const
    {
        return action->group().adjoint(g, at_slice(v));
    }
};

TubeGauge roundtrip_gauge(const TubeModel &t, const VectorFieldHandle &x);

// nu(X): the vertical part X - (psi^X)_M at a tube point.
Vec vertical_part(const TubeModel &t, const VectorFieldHandle &x, const GroupElement &g, const Vec &v);

struct TransportReport {
    double velocity_residual = 0.0;
    double projected_at_origin = 0.0;
    double gauged_at_origin = 0.0;
    bool passed = false;
};

// Requires m to be a relative equilibrium of X (else NotRelativeEquilibrium).
TransportReport transport_rel_eq_checks(const TubeModel &t, const VectorFieldHandle &x, double tol = 1e-9);

struct Retraction {
    GroupElement g;
    Vec v;
    double residual = 0.0;
    bool converged = false;
};

// Best-effort (g, v) with p = g . j(v) for diagnostics: sampled start over
// exp(q) followed by Gauss-Newton on the orbit-tangent components. Can fail
// away from the tube or for non-compact directions; check `converged`.
Retraction retract(const TubeModel &t, const Vec &p, int n_starts = 64, std::uint64_t seed = 3);

} // namespace equistab
