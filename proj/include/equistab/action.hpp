#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "equistab/expr.hpp"
#include "equistab/lie.hpp"
#include "equistab/linalg.hpp"

namespace equistab {

// Representation of a matrix group on R^N. The algebra acts by
// xi -> R(xi) x + t(xi); the group acts through exponentials of the
// (N+1)x(N+1) matrix [[R(xi), t(xi)], [0, 0]].
class LinearGAction {
public:
    LinearGAction(LieGroup group, std::vector<Mat> algebra_rep, std::vector<Vec> affine_part = {},
                  bool orthogonal = true, double tolerance = 1e-9);

    // "standard" (the defining representation; affine for SE2) and
    // "cotangent_lift" (R = blockdiag(A, -A^T), translations on the first half).
    static LinearGAction catalog(LieGroup group, std::string_view name);

    const LieGroup &group() const { return group_; }
    int dim() const { return n_; }
    bool affine() const { return !affine_.empty(); }
    bool orthogonal() const { return orthogonal_; }
    const std::vector<Mat> &algebra_rep() const { return rep_; }
    const std::vector<Vec> &affine_part() const { return affine_; }
    double tolerance() const { return tolerance_; }

    Mat rep_matrix(const AlgebraVector &xi) const;
    Vec translation(const AlgebraVector &xi) const;
    // Largest ||R([e_i,e_j]) - [R(e_i),R(e_j)]|| (with the affine cocycle term).
    double homomorphism_defect() const;
    // Largest ||R(e_i) + R(e_i)^T||; zero iff the linear part is orthogonal.
    double skew_defect() const;

    Vec act(const GroupElement &g, const Vec &x) const;
    Mat linear_part(const GroupElement &g) const;

    // N x d matrix whose columns are the fundamental fields (e_i)_M(m).
    Mat fundamental_matrix(const Vec &m) const;

private:
    void check_point(const Vec &x) const;
    std::vector<Mat> word_matrices(const GroupElement &g) const;

    LieGroup group_;
    int n_;
    std::vector<Mat> rep_;
    std::vector<Vec> affine_;
    bool orthogonal_;
    double tolerance_;
    // True when group matrices themselves act (standard representation),
    // so elements without an exponential word can still be applied.
    bool defining_ = false;
};

using FieldFn = std::function<Vec(const Vec &)>;

// A vector field together with the subalgebra (columns, algebra coordinates)
// of the group it is claimed to be equivariant under.
struct VectorFieldHandle {
    FieldFn field;
    Mat declared;

    Vec operator()(const Vec &x) const { return field(x); }
};

// psi: M -> h, with h spanned by the columns of `declared`.
struct GaugeTransformation {
    FieldFn map;
    Mat declared;

    Vec operator()(const Vec &x) const { return map(x); }
};

struct OrbitTangent {
    Mat orbit_basis;      // N x dim(orbit), orthonormal
    Mat stabilizer_basis; // d x dim(g_m), orthonormal in coordinates
    RankDecomposition rank;
};

struct VelocitySolution {
    AlgebraVector xi;
    double residual = 0.0;
    double field_norm = 0.0;
    bool is_rel_eq = false;
    Mat kernel; // d x k, velocities are unique modulo these
};

struct SampledViolation {
    double max_violation = 0.0;
    double max_relative = 0.0;
    int samples = 0;
};

// Where random test points are drawn: center + spread * N(0, I).
struct PointSampling {
    Vec center;
    double spread = 1.0;
};

Vec fundamental_field(const LinearGAction &a, const AlgebraVector &xi, const Vec &m);
OrbitTangent orbit_tangent(const LinearGAction &a, const Vec &m, double rel_cutoff = default_rank_cutoff);

// Minimum-norm least-squares velocity. `restrict_to` (d x k) limits the search
// to a subspace of the algebra (empty means the whole algebra).
VelocitySolution solve_velocity(const LinearGAction &a, const VectorFieldHandle &x, const Vec &m,
                                double tol_releq = 1e-9, const Mat &restrict_to = Mat());

Vec induced_gauge_field(const LinearGAction &a, const GaugeTransformation &psi, const Vec &m);
VectorFieldHandle apply_gauge(const LinearGAction &a, const VectorFieldHandle &x, const GaugeTransformation &psi);
VectorFieldHandle augment_field(const LinearGAction &a, const VectorFieldHandle &x, const AlgebraVector &xi);
GaugeTransformation constant_gauge(const AlgebraVector &xi, const Mat &declared);

SampledViolation check_equivariance(const LinearGAction &a, const VectorFieldHandle &x, int n_samples,
                                    std::uint64_t seed, const PointSampling &points = {});
SampledViolation check_gauge_equivariance(const LinearGAction &a, const GaugeTransformation &psi, int n_samples,
                                          std::uint64_t seed, const PointSampling &points = {});
SampledViolation check_invariance(const Expression &e, const LinearGAction &a, int n_samples, std::uint64_t seed,
                                  const PointSampling &points = {});

Vec sample_point(Sampler &rng, int n, const PointSampling &points);

} // namespace equistab
