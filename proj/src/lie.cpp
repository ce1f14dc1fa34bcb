#include "equistab/lie.hpp"

#include <charconv>
#include <cmath>

#include "equistab/error.hpp"

namespace equistab {

namespace {

Mat rotation_generator()
{
    Mat j(2, 2);
    j << 0.0, -1.0, 1.0, 0.0;
    return j;
}

double orthogonality_residual(const Mat &g)
{
    const Eigen::Index n = g.rows();
    if (g.cols() != n) {
        return std::numeric_limits<double>::infinity();
    }
    return (g.transpose() * g - Mat::Identity(n, n)).norm() + std::abs(g.determinant() - 1.0);
}

bool all_finite(const Vec &v)
{
    return v.allFinite();
}

} // namespace

Mat Splitting::sub_matrix() const
{
    return algebra_matrix(sub_basis, projector.rows());
}

Mat Splitting::comp_matrix() const
{
    return algebra_matrix(comp_basis, projector.rows());
}

std::vector<AlgebraVector> as_algebra_vectors(const Mat &cols)
{
    std::vector<AlgebraVector> out;
    out.reserve(static_cast<std::size_t>(cols.cols()));
    for (Eigen::Index i = 0; i < cols.cols(); ++i) {
        out.emplace_back(Vec(cols.col(i)));
    }
    return out;
}

Mat algebra_matrix(const std::vector<AlgebraVector> &vs, Eigen::Index d)
{
    Mat m(d, static_cast<Eigen::Index>(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (vs[i].size() != d) {
            fail(ErrorCode::DimensionMismatch, "algebra vector has wrong length");
        }
        m.col(static_cast<Eigen::Index>(i)) = vs[i].coords;
    }
    return m;
}

Mat subspace_intersection(const Mat &a, const Mat &b, double rel_cutoff)
{
    const Eigen::Index n = a.rows();
    if (a.cols() == 0 || b.cols() == 0) {
        return Mat(n, 0);
    }
    const Mat qa = orthonormal_range(a, rel_cutoff);
    const Mat qb = orthonormal_range(b, rel_cutoff);
    Mat stacked(n, qa.cols() + qb.cols());
    stacked << qa, -qb;
    const Mat coeffs = null_space(stacked, 1e-8);
    if (coeffs.cols() == 0) {
        return Mat(n, 0);
    }
    return orthonormal_range(qa * coeffs.topRows(qa.cols()), rel_cutoff);
}

LieGroup::LieGroup(std::string name, std::vector<Mat> basis, std::optional<Mat> inner_product,
                   MembershipResidual membership, double tolerance, std::optional<std::vector<Vec>> compact_basis)
    : name_(std::move(name)), basis_(std::move(basis)), membership_(std::move(membership)), tolerance_(tolerance)
{
    if (basis_.empty()) {
        fail(ErrorCode::DegenerateBasis, "group '" + name_ + "' has an empty algebra basis");
    }
    n_ = static_cast<int>(basis_.front().rows());
    d_ = static_cast<int>(basis_.size());
    flat_ = Mat(n_ * n_, d_);
    for (int i = 0; i < d_; ++i) {
        const Mat &e = basis_[static_cast<std::size_t>(i)];
        if (e.rows() != n_ || e.cols() != n_) {
            fail(ErrorCode::DimensionMismatch, "algebra basis matrices must all be " + std::to_string(n_) + "x" +
                                                   std::to_string(n_));
        }
        if (!e.allFinite()) {
            fail(ErrorCode::NonFiniteInput, "algebra basis contains non-finite entries");
        }
        flat_.col(i) = Eigen::Map<const Vec>(e.data(), n_ * n_);
    }
    const auto rank = rank_decompose(flat_, 1e-12);
    if (rank.rank < d_) {
        fail(ErrorCode::DegenerateBasis, "algebra basis of '" + name_ + "' is linearly dependent");
    }
    flat_pinv_ = flat_.completeOrthogonalDecomposition().pseudoInverse();

    structure_.assign(static_cast<std::size_t>(d_ * d_ * d_), 0.0);
    for (int i = 0; i < d_; ++i) {
        for (int j = 0; j < d_; ++j) {
            const Mat &a = basis_[static_cast<std::size_t>(i)];
            const Mat &b = basis_[static_cast<std::size_t>(j)];
            const Mat comm = a * b - b * a;
            abelian_ = abelian_ && comm.isZero(0.0);
            const AlgebraVector c = expand(comm);
            for (int k = 0; k < d_; ++k) {
                structure_[static_cast<std::size_t>((k * d_ + i) * d_ + j)] = c.coords(k);
            }
        }
    }

    if (inner_product) {
        inner_ = *inner_product;
    } else {
        inner_ = flat_.transpose() * flat_;
    }
    if (inner_.rows() != d_ || inner_.cols() != d_) {
        fail(ErrorCode::DimensionMismatch, "inner product must be " + std::to_string(d_) + "x" + std::to_string(d_));
    }
    if ((inner_ - inner_.transpose()).norm() > tolerance_ * (1.0 + inner_.norm())) {
        fail(ErrorCode::DegenerateBasis, "inner product is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(inner_);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        fail(ErrorCode::DegenerateBasis, "inner product is not positive definite");
    }
    inner_inv_ = inner_.inverse();

    if (compact_basis) {
        compact_ = *compact_basis;
        for (const auto &v : compact_) {
            if (v.size() != d_) {
                fail(ErrorCode::DimensionMismatch, "compact subalgebra vector has wrong length");
            }
        }
    } else {
        for (int i = 0; i < d_; ++i) {
            compact_.push_back(Vec::Unit(d_, i));
        }
    }
}

LieGroup LieGroup::catalog(std::string_view name)
{
    const Mat j = rotation_generator();
    if (name == "SO2") {
        return LieGroup("SO2", {j}, std::nullopt, orthogonality_residual);
    }
    if (name == "SO3") {
        Mat l1 = Mat::Zero(3, 3), l2 = Mat::Zero(3, 3), l3 = Mat::Zero(3, 3);
        l1(2, 1) = 1.0;
        l1(1, 2) = -1.0;
        l2(0, 2) = 1.0;
        l2(2, 0) = -1.0;
        l3(1, 0) = 1.0;
        l3(0, 1) = -1.0;
        return LieGroup("SO3", {l1, l2, l3}, std::nullopt, orthogonality_residual);
    }
    if (name == "SE2") {
        Mat rot = Mat::Zero(3, 3), tx = Mat::Zero(3, 3), ty = Mat::Zero(3, 3);
        rot.topLeftCorner(2, 2) = j;
        tx(0, 2) = 1.0;
        ty(1, 2) = 1.0;
        auto residual = [](const Mat &g) {
            if (g.rows() != 3 || g.cols() != 3) {
                return std::numeric_limits<double>::infinity();
            }
            Vec last(3);
            last << 0.0, 0.0, 1.0;
            return orthogonality_residual(g.topLeftCorner(2, 2)) + (Vec(g.row(2).transpose()) - last).norm();
        };
        return LieGroup("SE2", {rot, tx, ty}, std::nullopt, residual, 1e-9, std::vector<Vec>{Vec::Unit(3, 0)});
    }
    if (name.size() >= 2 && name[0] == 'T') {
        int k = 0;
        const auto *first = name.data() + 1;
        const auto *last = name.data() + name.size();
        auto [ptr, ec] = std::from_chars(first, last, k);
        if (ec == std::errc() && ptr == last && k >= 1 && k <= 16) {
            std::vector<Mat> basis;
            for (int i = 0; i < k; ++i) {
                Mat e = Mat::Zero(2 * k, 2 * k);
                e.block(2 * i, 2 * i, 2, 2) = j;
                basis.push_back(e);
            }
            auto residual = [k](const Mat &g) {
                if (g.rows() != 2 * k || g.cols() != 2 * k) {
                    return std::numeric_limits<double>::infinity();
                }
                double r = 0.0;
                Mat off = g;
                for (int i = 0; i < k; ++i) {
                    r += orthogonality_residual(g.block(2 * i, 2 * i, 2, 2));
                    off.block(2 * i, 2 * i, 2, 2).setZero();
                }
                return r + off.norm();
            };
            return LieGroup(std::string(name), basis, std::nullopt, residual);
        }
    }
    fail(ErrorCode::InvalidModel, "unknown catalog group '" + std::string(name) + "'");
}

double LieGroup::membership_residual(const Mat &g) const
{
    if (g.rows() != n_ || g.cols() != n_) {
        return std::numeric_limits<double>::infinity();
    }
    return membership_ ? membership_(g) : 0.0;
}

void LieGroup::check_dim(const AlgebraVector &xi) const
{
    if (xi.size() != d_) {
        fail(ErrorCode::DimensionMismatch, "algebra vector of length " + std::to_string(xi.size()) + " for group '" +
                                               name_ + "' of dimension " + std::to_string(d_));
    }
}

void LieGroup::check_dim(const CoalgebraVector &mu) const
{
    if (mu.size() != d_) {
        fail(ErrorCode::DimensionMismatch, "coalgebra vector of length " + std::to_string(mu.size()) +
                                               " for group '" + name_ + "' of dimension " + std::to_string(d_));
    }
}

Mat LieGroup::to_matrix(const AlgebraVector &xi) const
{
    check_dim(xi);
    Mat m = Mat::Zero(n_, n_);
    for (int i = 0; i < d_; ++i) {
        m += xi.coords(i) * basis_[static_cast<std::size_t>(i)];
    }
    return m;
}

AlgebraVector LieGroup::expand(const Mat &x) const
{
    if (x.rows() != n_ || x.cols() != n_) {
        fail(ErrorCode::DimensionMismatch, "matrix is not " + std::to_string(n_) + "x" + std::to_string(n_));
    }
    const Eigen::Map<const Vec> flat(x.data(), n_ * n_);
    Vec coords = flat_pinv_ * flat;
    const double residual = (flat_ * coords - flat).norm();
    if (residual > tolerance_ * (1.0 + flat.norm())) {
        fail(ErrorCode::NotInAlgebra, "re-expansion residual " + std::to_string(residual) + " in group '" + name_ +
                                          "'");
    }
    return AlgebraVector(std::move(coords));
}

GroupElement LieGroup::identity() const
{
    return GroupElement{Mat::Identity(n_, n_), std::vector<Vec>{}};
}

GroupElement LieGroup::exp(const AlgebraVector &xi) const
{
    check_dim(xi);
    if (!all_finite(xi.coords)) {
        fail(ErrorCode::NonFiniteInput, "exp of a non-finite algebra vector");
    }
    return GroupElement{expm(to_matrix(xi)), std::vector<Vec>{xi.coords}};
}

GroupElement LieGroup::multiply(const GroupElement &g, const GroupElement &h) const
{
    GroupElement out{g.matrix * h.matrix, std::nullopt};
    if (g.word && h.word) {
        std::vector<Vec> w = *g.word;
        w.insert(w.end(), h.word->begin(), h.word->end());
        out.word = std::move(w);
    }
    return out;
}

GroupElement LieGroup::inverse(const GroupElement &g) const
{
    GroupElement out{g.matrix.inverse(), std::nullopt};
    if (g.word) {
        std::vector<Vec> w;
        for (auto it = g.word->rbegin(); it != g.word->rend(); ++it) {
            w.push_back(-*it);
        }
        out.word = std::move(w);
    }
    return out;
}

AlgebraVector LieGroup::bracket(const AlgebraVector &xi, const AlgebraVector &eta) const
{
    check_dim(xi);
    check_dim(eta);
    Vec out = Vec::Zero(d_);
    for (int k = 0; k < d_; ++k) {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) {
            if (xi.coords(i) == 0.0) {
                continue;
            }
            for (int j = 0; j < d_; ++j) {
                s += structure_constant(k, i, j) * xi.coords(i) * eta.coords(j);
            }
        }
        out(k) = s;
    }
    return AlgebraVector(std::move(out));
}

Mat LieGroup::ad_matrix(const AlgebraVector &xi) const
{
    check_dim(xi);
    Mat m = Mat::Zero(d_, d_);
    for (int k = 0; k < d_; ++k) {
        for (int j = 0; j < d_; ++j) {
            double s = 0.0;
            for (int i = 0; i < d_; ++i) {
                s += structure_constant(k, i, j) * xi.coords(i);
            }
            m(k, j) = s;
        }
    }
    return m;
}

Mat LieGroup::adjoint_matrix(const GroupElement &g) const
{
    if (g.matrix.rows() != n_ || g.matrix.cols() != n_) {
        fail(ErrorCode::DimensionMismatch, "group element has wrong size for group '" + name_ + "'");
    }
    // exp(ad) is exactly the identity on an abelian algebra
    if (abelian_ && g.word) {
        return Mat::Identity(d_, d_);
    }
    const Mat ginv = g.matrix.inverse();
    Mat m(d_, d_);
    for (int i = 0; i < d_; ++i) {
        m.col(i) = expand(g.matrix * basis_[static_cast<std::size_t>(i)] * ginv).coords;
    }
    return m;
}

AlgebraVector LieGroup::adjoint(const GroupElement &g, const AlgebraVector &xi) const
{
    check_dim(xi);
    if (abelian_ && g.word) {
        return xi;
    }
    return expand(g.matrix * to_matrix(xi) * g.matrix.inverse());
}

CoalgebraVector LieGroup::coadjoint(const GroupElement &g, const CoalgebraVector &mu) const
{
    check_dim(mu);
    const Mat ad_inv = adjoint_matrix(inverse(g));
    return CoalgebraVector(ad_inv.transpose() * mu.coords);
}

CoalgebraVector LieGroup::coadjoint_infinitesimal(const AlgebraVector &xi, const CoalgebraVector &mu) const
{
    check_dim(mu);
    return CoalgebraVector(-ad_matrix(xi).transpose() * mu.coords);
}

std::vector<CoalgebraVector> LieGroup::annihilator(const std::vector<AlgebraVector> &sub_basis) const
{
    if (sub_basis.empty()) {
        std::vector<CoalgebraVector> out;
        for (int i = 0; i < d_; ++i) {
            out.emplace_back(Vec::Unit(d_, i));
        }
        return out;
    }
    const Mat s = algebra_matrix(sub_basis, d_);
    const auto rd = rank_decompose(s.transpose());
    if (rd.rank < s.cols()) {
        fail(ErrorCode::DegenerateBasis, "annihilator of a linearly dependent family");
    }
    std::vector<CoalgebraVector> out;
    for (Eigen::Index i = 0; i < rd.null.cols(); ++i) {
        out.emplace_back(Vec(rd.null.col(i)));
    }
    return out;
}

Splitting LieGroup::orthogonal_splitting(const std::vector<AlgebraVector> &sub_basis) const
{
    Splitting out;
    out.sub_basis = sub_basis;
    if (sub_basis.empty()) {
        for (int i = 0; i < d_; ++i) {
            out.comp_basis.emplace_back(Vec::Unit(d_, i));
        }
        out.projector = Mat::Zero(d_, d_);
        return out;
    }
    const Mat s = algebra_matrix(sub_basis, d_);
    if (rank_decompose(s).rank < s.cols()) {
        fail(ErrorCode::DegenerateBasis, "splitting of a linearly dependent family");
    }
    const Mat gram = s.transpose() * inner_ * s;
    out.projector = s * gram.ldlt().solve(s.transpose() * inner_);
    const Mat comp = null_space(s.transpose() * inner_);
    out.comp_basis = as_algebra_vectors(comp);
    return out;
}

Splitting LieGroup::splitting(const std::vector<AlgebraVector> &sub_basis,
                              const std::vector<AlgebraVector> &comp_basis) const
{
    if (sub_basis.size() + comp_basis.size() != static_cast<std::size_t>(d_)) {
        fail(ErrorCode::DegenerateBasis, "subalgebra and complement dimensions do not add up");
    }
    Mat frame(d_, d_);
    const auto k = static_cast<Eigen::Index>(sub_basis.size());
    if (k > 0) {
        frame.leftCols(k) = algebra_matrix(sub_basis, d_);
    }
    if (k < d_) {
        frame.rightCols(d_ - k) = algebra_matrix(comp_basis, d_);
    }
    if (condition_number(frame) > 1e12) {
        fail(ErrorCode::DegenerateBasis, "subalgebra and complement are not transverse");
    }
    Mat diag = Mat::Zero(d_, d_);
    diag.topLeftCorner(k, k).setIdentity();
    Splitting out;
    out.sub_basis = sub_basis;
    out.comp_basis = comp_basis;
    out.projector = frame * diag * frame.inverse();
    return out;
}

std::vector<AlgebraVector> LieGroup::centralizer(const AlgebraVector &xi) const
{
    return as_algebra_vectors(null_space(ad_matrix(xi)));
}

double LieGroup::inner(const AlgebraVector &xi, const AlgebraVector &eta) const
{
    check_dim(xi);
    check_dim(eta);
    return xi.coords.dot(inner_ * eta.coords);
}

double LieGroup::norm(const AlgebraVector &xi) const
{
    return std::sqrt(std::max(0.0, inner(xi, xi)));
}

double LieGroup::dual_norm(const CoalgebraVector &mu) const
{
    check_dim(mu);
    return std::sqrt(std::max(0.0, mu.coords.dot(inner_inv_ * mu.coords)));
}

double LieGroup::sup_norm(const CoalgebraVector &mu) const
{
    // The maximiser of <mu, xi> on the unit sphere is G^{-1} mu / ||G^{-1} mu||_g.
    return dual_norm(mu);
}

NormSuite LieGroup::norm_suite(const AlgebraVector &xi) const
{
    const double n = norm(xi);
    return NormSuite{n, n, n};
}

NormSuite LieGroup::norm_suite(const CoalgebraVector &mu) const
{
    const double n = dual_norm(mu);
    return NormSuite{n, n, sup_norm(mu)};
}

AlgebraVector LieGroup::random_element(Sampler &rng, const std::vector<Vec> &sub_basis, double scale) const
{
    if (sub_basis.empty()) {
        return AlgebraVector(rng.normal(d_, scale));
    }
    Vec v = Vec::Zero(d_);
    for (const auto &b : sub_basis) {
        v += scale * rng.normal() * b;
    }
    return AlgebraVector(std::move(v));
}

AdInvarianceReport LieGroup::verify_ad_invariance(int n_samples, std::uint64_t seed,
                                                  const std::vector<Vec> &sub_basis) const
{
    Sampler rng(seed);
    const std::vector<Vec> &sub = sub_basis.empty() ? compact_ : sub_basis;
    AdInvarianceReport report;
    for (int s = 0; s < n_samples; ++s) {
        const GroupElement g = exp(random_element(rng, sub, 1.5));
        const AlgebraVector xi(rng.normal(d_));
        const AlgebraVector eta(rng.normal(d_));
        const double before = inner(xi, eta);
        const double after = inner(adjoint(g, xi), adjoint(g, eta));
        report.max_violation = std::max(report.max_violation, std::abs(after - before));
        ++report.samples;
    }
    return report;
}

} // namespace equistab
