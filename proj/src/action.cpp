#include "equistab/action.hpp"

#include <cmath>
#include <string>

#include "equistab/error.hpp"

namespace equistab {

namespace {

Mat commutator(const Mat &a, const Mat &b)
{
    return a * b - b * a;
}

} // namespace

LinearGAction::LinearGAction(LieGroup group, std::vector<Mat> algebra_rep, std::vector<Vec> affine_part,
                             bool orthogonal, double tolerance)
    : group_(std::move(group)), n_(0), rep_(std::move(algebra_rep)), affine_(std::move(affine_part)),
      orthogonal_(orthogonal), tolerance_(tolerance)
{
    const int d = group_.dim();
    if (static_cast<int>(rep_.size()) != d) {
        fail(ErrorCode::InvalidAction, "representation has " + std::to_string(rep_.size()) +
                                           " matrices for an algebra of dimension " + std::to_string(d));
    }
    if (d == 0) {
        fail(ErrorCode::InvalidAction, "zero-dimensional group");
    }
    n_ = static_cast<int>(rep_[0].rows());
    for (const auto &r : rep_) {
        if (r.rows() != n_ || r.cols() != n_ || !r.allFinite()) {
            fail(ErrorCode::InvalidAction, "representation matrices must be finite and " + std::to_string(n_) + "x" +
                                               std::to_string(n_));
        }
    }
    if (!affine_.empty()) {
        if (static_cast<int>(affine_.size()) != d) {
            fail(ErrorCode::InvalidAction, "affine part needs one translation per generator");
        }
        for (const auto &t : affine_) {
            if (t.size() != n_ || !t.allFinite()) {
                fail(ErrorCode::InvalidAction, "affine translations must have length " + std::to_string(n_));
            }
        }
        bool all_zero = true;
        for (const auto &t : affine_) {
            all_zero = all_zero && t.isZero(0.0);
        }
        if (all_zero) {
            affine_.clear();
        }
    }
    const double defect = homomorphism_defect();
    if (defect > tolerance_ * 100.0) {
        fail(ErrorCode::InvalidAction, "representation is not an algebra homomorphism (defect " +
                                           std::to_string(defect) + ")");
    }
    if (orthogonal_ && skew_defect() > tolerance_ * 100.0) {
        fail(ErrorCode::InvalidAction, "action declared orthogonal but the linear part is not skew");
    }

    // Standard representation: group matrices act directly.
    const int gn = group_.ambient_dim();
    bool defining = true;
    for (int i = 0; i < d && defining; ++i) {
        const Mat &e = group_.basis()[static_cast<std::size_t>(i)];
        if (affine()) {
            defining = gn == n_ + 1 && (e.topLeftCorner(n_, n_) - rep_[i]).norm() <= 1e-14 &&
                       (Vec(e.col(n_).head(n_)) - affine_[static_cast<std::size_t>(i)]).norm() <= 1e-14;
        } else {
            defining = gn == n_ && (e - rep_[i]).norm() <= 1e-14;
        }
    }
    defining_ = defining;
}

LinearGAction LinearGAction::catalog(LieGroup group, std::string_view name)
{
    const int d = group.dim();
    const bool se2 = group.name() == "SE2";
    std::vector<Mat> rep;
    std::vector<Vec> affine;
    if (name == "standard") {
        for (int i = 0; i < d; ++i) {
            const Mat &e = group.basis()[static_cast<std::size_t>(i)];
            if (se2) {
                rep.push_back(e.topLeftCorner(2, 2));
                affine.push_back(e.col(2).head(2));
            } else {
                rep.push_back(e);
            }
        }
    } else if (name == "cotangent_lift") {
        for (int i = 0; i < d; ++i) {
            const Mat &e = group.basis()[static_cast<std::size_t>(i)];
            const Mat a = se2 ? Mat(e.topLeftCorner(2, 2)) : e;
            const Eigen::Index k = a.rows();
            Mat r = Mat::Zero(2 * k, 2 * k);
            r.topLeftCorner(k, k) = a;
            r.bottomRightCorner(k, k) = -a.transpose();
            rep.push_back(r);
            if (se2) {
                Vec t = Vec::Zero(4);
                t.head(2) = e.col(2).head(2);
                affine.push_back(t);
            }
        }
    } else {
        fail(ErrorCode::InvalidModel, "unknown catalog action '" + std::string(name) + "'");
    }
    return LinearGAction(std::move(group), std::move(rep), std::move(affine), true);
}

Mat LinearGAction::rep_matrix(const AlgebraVector &xi) const
{
    if (xi.size() != group_.dim()) {
        fail(ErrorCode::DimensionMismatch, "algebra vector has wrong length");
    }
    Mat r = Mat::Zero(n_, n_);
    for (int i = 0; i < group_.dim(); ++i) {
        r += xi.coords(i) * rep_[static_cast<std::size_t>(i)];
    }
    return r;
}

Vec LinearGAction::translation(const AlgebraVector &xi) const
{
    Vec t = Vec::Zero(n_);
    if (!affine()) {
        return t;
    }
    if (xi.size() != group_.dim()) {
        fail(ErrorCode::DimensionMismatch, "algebra vector has wrong length");
    }
    for (int i = 0; i < group_.dim(); ++i) {
        t += xi.coords(i) * affine_[static_cast<std::size_t>(i)];
    }
    return t;
}

double LinearGAction::homomorphism_defect() const
{
    const int d = group_.dim();
    double worst = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            Vec c(d);
            for (int k = 0; k < d; ++k) {
                c(k) = group_.structure_constant(k, i, j);
            }
            const AlgebraVector br(c);
            worst = std::max(worst, (rep_matrix(br) - commutator(rep_[i], rep_[j])).norm());
            if (affine()) {
                // [(A,a),(B,b)] = ([A,B], A b - B a)
                const Vec expected = rep_[i] * affine_[j] - rep_[j] * affine_[i];
                worst = std::max(worst, (translation(br) - expected).norm());
            }
        }
    }
    return worst;
}

double LinearGAction::skew_defect() const
{
    double worst = 0.0;
    for (const auto &r : rep_) {
        worst = std::max(worst, (r + r.transpose()).norm());
    }
    return worst;
}

void LinearGAction::check_point(const Vec &x) const
{
    if (x.size() != n_) {
        fail(ErrorCode::DimensionMismatch, "point of length " + std::to_string(x.size()) + " for an action on R^" +
                                               std::to_string(n_));
    }
}

std::vector<Mat> LinearGAction::word_matrices(const GroupElement &g) const
{
    std::vector<Mat> out;
    for (const auto &w : *g.word) {
        const AlgebraVector xi(w);
        Mat big = Mat::Zero(n_ + 1, n_ + 1);
        big.topLeftCorner(n_, n_) = rep_matrix(xi);
        big.col(n_).head(n_) = translation(xi);
        out.push_back(expm(big));
    }
    return out;
}

Vec LinearGAction::act(const GroupElement &g, const Vec &x) const
{
    check_point(x);
    if (g.word) {
        Vec h(n_ + 1);
        h.head(n_) = x;
        h(n_) = 1.0;
        const auto mats = word_matrices(g);
        for (auto it = mats.rbegin(); it != mats.rend(); ++it) {
            h = *it * h;
        }
        return h.head(n_);
    }
    if (!defining_) {
        fail(ErrorCode::InvalidAction, "group element has no exponential word and the representation is not the "
                                       "defining one");
    }
    if (affine()) {
        return g.matrix.topLeftCorner(n_, n_) * x + Vec(g.matrix.col(n_).head(n_));
    }
    return g.matrix * x;
}

Mat LinearGAction::linear_part(const GroupElement &g) const
{
    if (g.word) {
        Mat l = Mat::Identity(n_, n_);
        for (const auto &m : word_matrices(g)) {
            l = l * m.topLeftCorner(n_, n_);
        }
        return l;
    }
    if (!defining_) {
        fail(ErrorCode::InvalidAction, "group element has no exponential word and the representation is not the "
                                       "defining one");
    }
    return g.matrix.topLeftCorner(n_, n_);
}

Mat LinearGAction::fundamental_matrix(const Vec &m) const
{
    check_point(m);
    const int d = group_.dim();
    Mat a(n_, d);
    for (int i = 0; i < d; ++i) {
        a.col(i) = rep_[static_cast<std::size_t>(i)] * m;
        if (affine()) {
            a.col(i) += affine_[static_cast<std::size_t>(i)];
        }
    }
    return a;
}

Vec fundamental_field(const LinearGAction &a, const AlgebraVector &xi, const Vec &m)
{
    if (xi.size() != a.group().dim() || m.size() != a.dim()) {
        fail(ErrorCode::DimensionMismatch, "fundamental field: algebra or point dimension mismatch");
    }
    return a.rep_matrix(xi) * m + a.translation(xi);
}

OrbitTangent orbit_tangent(const LinearGAction &a, const Vec &m, double rel_cutoff)
{
    const Mat f = a.fundamental_matrix(m);
    OrbitTangent out;
    out.rank = rank_decompose(f, rel_cutoff);
    out.orbit_basis = out.rank.range;
    out.stabilizer_basis = out.rank.null;
    return out;
}

VelocitySolution solve_velocity(const LinearGAction &a, const VectorFieldHandle &x, const Vec &m, double tol_releq,
                                const Mat &restrict_to)
{
    const int d = a.group().dim();
    const Mat basis = restrict_to.rows() == 0 ? Mat(Mat::Identity(d, d)) : restrict_to;
    const Vec target = x(m);
    if (!target.allFinite()) {
        fail(ErrorCode::NonFiniteInput, "vector field is not finite at the point");
    }
    VelocitySolution out;
    out.field_norm = target.norm();
    const Mat f = a.fundamental_matrix(m) * basis;
    Vec coeffs = Vec::Zero(basis.cols());
    Mat null = Mat::Identity(basis.cols(), basis.cols());
    if (basis.cols() > 0) {
        const RankDecomposition rd = rank_decompose(f);
        Eigen::JacobiSVD<Mat> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec s = svd.singularValues();
        const Vec ut = svd.matrixU().transpose() * target;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (i < rd.rank) {
                coeffs += svd.matrixV().col(i) * (ut(i) / s(i));
            }
        }
        null = rd.null;
    }
    out.xi = AlgebraVector(basis * coeffs);
    out.residual = (f * coeffs - target).norm();
    out.is_rel_eq = out.residual <= tol_releq * (1.0 + out.field_norm);
    out.kernel = orthonormal_range(basis * null);
    if (out.kernel.cols() == 0) {
        out.kernel = Mat(d, 0);
    }
    return out;
}

Vec induced_gauge_field(const LinearGAction &a, const GaugeTransformation &psi, const Vec &m)
{
    return fundamental_field(a, AlgebraVector(psi(m)), m);
}

VectorFieldHandle apply_gauge(const LinearGAction &a, const VectorFieldHandle &x, const GaugeTransformation &psi)
{
    auto act = std::make_shared<const LinearGAction>(a);
    auto field = x.field;
    auto map = psi.map;
    return VectorFieldHandle{[act, field, map](const Vec &m) -> Vec {
                                 return field(m) + fundamental_field(*act, AlgebraVector(map(m)), m);
                             },
                             psi.declared};
}

VectorFieldHandle augment_field(const LinearGAction &a, const VectorFieldHandle &x, const AlgebraVector &xi)
{
    auto field = x.field;
    const Mat rep = a.rep_matrix(xi);
    const Vec t = a.translation(xi);
    Mat declared = algebra_matrix(a.group().centralizer(xi), a.group().dim());
    if (x.declared.rows() == a.group().dim() && x.declared.cols() < a.group().dim()) {
        declared = subspace_intersection(x.declared, declared);
    }
    return VectorFieldHandle{[field, rep, t](const Vec &m) -> Vec { return field(m) - (rep * m + t); }, declared};
}

GaugeTransformation constant_gauge(const AlgebraVector &xi, const Mat &declared)
{
    const Vec c = xi.coords;
    return GaugeTransformation{[c](const Vec &) { return c; }, declared};
}

Vec sample_point(Sampler &rng, int n, const PointSampling &points)
{
    Vec x = rng.normal(n, points.spread);
    if (points.center.size() == n) {
        x += points.center;
    }
    return x;
}

namespace {

GroupElement sample_declared(const LinearGAction &a, Sampler &rng, const Mat &declared)
{
    const LieGroup &g = a.group();
    if (declared.cols() == 0) {
        return g.identity();
    }
    return g.exp(g.random_element(rng, to_columns(declared), 1.0));
}

} // namespace

SampledViolation check_equivariance(const LinearGAction &a, const VectorFieldHandle &x, int n_samples,
                                    std::uint64_t seed, const PointSampling &points)
{
    Sampler rng(seed);
    SampledViolation out;
    for (int s = 0; s < n_samples; ++s) {
        const GroupElement g = sample_declared(a, rng, x.declared);
        const Vec m = sample_point(rng, a.dim(), points);
        const Vec lhs = x(a.act(g, m));
        const Vec xm = x(m);
        const Vec rhs = a.linear_part(g) * xm;
        const double v = (lhs - rhs).norm();
        out.max_violation = std::max(out.max_violation, v);
        out.max_relative = std::max(out.max_relative, v / (1.0 + xm.norm()));
        ++out.samples;
    }
    return out;
}

SampledViolation check_gauge_equivariance(const LinearGAction &a, const GaugeTransformation &psi, int n_samples,
                                          std::uint64_t seed, const PointSampling &points)
{
    Sampler rng(seed);
    SampledViolation out;
    const LieGroup &grp = a.group();
    for (int s = 0; s < n_samples; ++s) {
        const GroupElement g = sample_declared(a, rng, psi.declared);
        const Vec m = sample_point(rng, a.dim(), points);
        const Vec lhs = psi(a.act(g, m));
        const Vec pm = psi(m);
        const Vec rhs = grp.adjoint(g, AlgebraVector(pm)).coords;
        const double v = (lhs - rhs).norm();
        out.max_violation = std::max(out.max_violation, v);
        out.max_relative = std::max(out.max_relative, v / (1.0 + pm.norm()));
        ++out.samples;
    }
    return out;
}

SampledViolation check_invariance(const Expression &e, const LinearGAction &a, int n_samples, std::uint64_t seed,
                                  const PointSampling &points)
{
    if (e.n_vars() != a.dim()) {
        fail(ErrorCode::DimensionMismatch, "expression arity differs from the action dimension");
    }
    Sampler rng(seed);
    SampledViolation out;
    const Mat full = Mat::Identity(a.group().dim(), a.group().dim());
    for (int s = 0; s < n_samples; ++s) {
        const GroupElement g = sample_declared(a, rng, full);
        const Vec m = sample_point(rng, a.dim(), points);
        const double em = e.eval(m);
        const double v = std::abs(e.eval(a.act(g, m)) - em);
        out.max_violation = std::max(out.max_violation, v);
        out.max_relative = std::max(out.max_relative, v / (1.0 + std::abs(em)));
        ++out.samples;
    }
    return out;
}

} // namespace equistab
