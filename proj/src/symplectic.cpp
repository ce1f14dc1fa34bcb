#include "equistab/symplectic.hpp"

#include <cmath>
#include <string>

#include "equistab/error.hpp"

namespace equistab {

SymplecticStructure::SymplecticStructure(Mat omega, double tolerance) : omega_(std::move(omega))
{
    if (omega_.rows() != omega_.cols() || omega_.rows() == 0 || !omega_.allFinite()) {
        fail(ErrorCode::SingularOmega, "symplectic matrix must be square, finite and nonempty");
    }
    const double scale = std::max(1.0, omega_.norm());
    if ((omega_ + omega_.transpose()).norm() > tolerance * scale) {
        fail(ErrorCode::SingularOmega, "symplectic matrix is not antisymmetric");
    }
    if (omega_.rows() % 2 != 0 || condition_number(omega_) > 1e12) {
        fail(ErrorCode::SingularOmega, "symplectic matrix is singular");
    }
    inverse_ = omega_.inverse();
}

SymplecticStructure SymplecticStructure::named(std::string_view keyword, int n)
{
    if (n <= 0 || n % 2 != 0) {
        fail(ErrorCode::SingularOmega, "phase space dimension " + std::to_string(n) + " is not even");
    }
    const int k = n / 2;
    Mat w = Mat::Zero(n, n);
    if (keyword == "canonical") {
        w.topRightCorner(k, k) = Mat::Identity(k, k);
        w.bottomLeftCorner(k, k) = -Mat::Identity(k, k);
    } else if (keyword == "pairs") {
        for (int i = 0; i < k; ++i) {
            w(2 * i, 2 * i + 1) = 1.0;
            w(2 * i + 1, 2 * i) = -1.0;
        }
    } else {
        fail(ErrorCode::InvalidModel, "unknown symplectic form '" + std::string(keyword) + "'");
    }
    return SymplecticStructure(w);
}

SampledViolation SymplecticStructure::invariance_violation(const LinearGAction &a, int n_samples,
                                                           std::uint64_t seed) const
{
    if (a.dim() != dim()) {
        fail(ErrorCode::DimensionMismatch, "symplectic form and action live on different spaces");
    }
    Sampler rng(seed);
    SampledViolation out;
    const LieGroup &g = a.group();
    for (int s = 0; s < n_samples; ++s) {
        const Mat l = a.linear_part(g.exp(g.random_element(rng, {}, 1.0)));
        const Vec u = rng.normal(dim());
        const Vec v = rng.normal(dim());
        const double before = form(u, v);
        const double diff = std::abs(form(l * u, l * v) - before);
        out.max_violation = std::max(out.max_violation, diff);
        out.max_relative = std::max(out.max_relative, diff / (1.0 + std::abs(before)));
        ++out.samples;
    }
    return out;
}

HamiltonianSystem::HamiltonianSystem(LinearGAction a, SymplecticStructure w, Expression ham,
                                     std::vector<Expression> mom)
    : action(std::move(a)), omega(std::move(w)), h(std::move(ham)), momentum(std::move(mom))
{
    const int n = action.dim();
    if (omega.dim() != n) {
        fail(ErrorCode::DimensionMismatch, "symplectic form is " + std::to_string(omega.dim()) +
                                               "-dimensional but the action is on R^" + std::to_string(n));
    }
    if (h.n_vars() != n) {
        fail(ErrorCode::DimensionMismatch, "hamiltonian must be an expression in x1..x" + std::to_string(n));
    }
    if (static_cast<int>(momentum.size()) != action.group().dim()) {
        fail(ErrorCode::DimensionMismatch, "momentum map needs one component per algebra generator");
    }
    for (const auto &c : momentum) {
        if (c.n_vars() != n) {
            fail(ErrorCode::DimensionMismatch, "momentum components must be expressions in x1..x" +
                                                   std::to_string(n));
        }
    }
}

CoalgebraVector HamiltonianSystem::phi(const Vec &m) const
{
    Vec out(static_cast<Eigen::Index>(momentum.size()));
    for (std::size_t i = 0; i < momentum.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = momentum[i].eval(m);
    }
    return CoalgebraVector(std::move(out));
}

Mat HamiltonianSystem::dphi(const Vec &m) const
{
    Mat j(static_cast<Eigen::Index>(momentum.size()), dim());
    for (std::size_t i = 0; i < momentum.size(); ++i) {
        j.row(static_cast<Eigen::Index>(i)) = momentum[i].gradient(m).transpose();
    }
    return j;
}

Vec HamiltonianSystem::field_of(const Expression &f, const Vec &m) const
{
    return omega.omega_inverse().transpose() * f.gradient(m);
}

HamiltonianSystem HamiltonianSystem::recentered(const Vec &m) const
{
    const CoalgebraVector mu = phi(m);
    std::vector<Expression> shifted;
    for (std::size_t i = 0; i < momentum.size(); ++i) {
        const double c = mu.coords(static_cast<Eigen::Index>(i));
        shifted.push_back(c == 0.0 ? momentum[i] : momentum[i] + (-c));
    }
    const double h0 = h.eval(m);
    return HamiltonianSystem(action, omega, h0 == 0.0 ? h : h + (-h0), std::move(shifted));
}

VectorFieldHandle hamiltonian_field(const HamiltonianSystem &s, const Expression &f)
{
    const Mat solve = s.omega.omega_inverse().transpose();
    const int n = s.dim();
    // Re-check w(X(m), v) = df_m(v) at a few points.
    Sampler rng(0x5eed);
    for (int k = 0; k < 10; ++k) {
        const Vec m = rng.normal(n);
        const Vec v = rng.normal(n);
        Vec grad;
        try {
            grad = f.gradient(m);
        } catch (const Error &e) {
            if (e.code() == ErrorCode::DomainError) {
                continue;
            }
            throw;
        }
        const Vec x = solve * grad;
        const double lhs = s.omega.form(x, v);
        const double rhs = grad.dot(v);
        if (std::abs(lhs - rhs) > 1e-10 * (1.0 + grad.norm() * v.norm())) {
            fail(ErrorCode::SingularOmega, "symplectic inverse is too inaccurate for the hamiltonian field");
        }
    }
    const Mat declared = Mat::Identity(s.group().dim(), s.group().dim());
    return VectorFieldHandle{[solve, f](const Vec &m) -> Vec { return solve * f.gradient(m); }, declared};
}

VectorFieldHandle hamiltonian_field(const HamiltonianSystem &s)
{
    return hamiltonian_field(s, s.h);
}

namespace {

Expression quadratic_form(const Mat &q, int n)
{
    // Expression for x^T Q x with Q symmetric, skipping zero terms.
    Expression out;
    bool empty = true;
    auto add = [&](double c, const Expression &term) {
        const Expression t = c == 1.0 ? term : Expression::constant(c, n) * term;
        out = empty ? t : out + t;
        empty = false;
    };
    for (int j = 0; j < n; ++j) {
        for (int k = j; k < n; ++k) {
            const double c = j == k ? q(j, k) : 2.0 * q(j, k);
            if (std::abs(c) <= 1e-15) {
                continue;
            }
            const Expression xj = Expression::variable(j + 1, n);
            add(c, j == k ? pow(xj, 2) : xj * Expression::variable(k + 1, n));
        }
    }
    return empty ? Expression::constant(0.0, n) : out;
}

double property_violation(const std::vector<Expression> &comps, const std::vector<Mat> &gens, const Mat &omega,
                          Sampler &rng, int n_samples)
{
    const auto n = omega.rows();
    double worst = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        const Vec m = rng.normal(n);
        const Vec v = rng.normal(n);
        for (std::size_t i = 0; i < gens.size(); ++i) {
            const double lhs = comps[i].gradient(m).dot(v);
            const double rhs = (gens[i] * m).dot(omega * v);
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
        }
    }
    return worst;
}

} // namespace

std::vector<Expression> quadratic_momentum(const std::vector<Mat> &generators, const Mat &omega, std::uint64_t seed)
{
    const int n = static_cast<int>(omega.rows());
    std::vector<Mat> sym;
    for (const auto &r : generators) {
        if (r.rows() != n || r.cols() != n) {
            fail(ErrorCode::DimensionMismatch, "generator and symplectic form sizes differ");
        }
        const Mat wr = omega * r;
        sym.push_back(0.5 * (wr + wr.transpose()));
    }
    for (const double c : {-0.5, 0.5}) {
        std::vector<Expression> comps;
        for (const auto &q : sym) {
            comps.push_back(quadratic_form(c * q, n));
        }
        Sampler rng(seed);
        if (property_violation(comps, generators, omega, rng, 20) <= 1e-9) {
            return comps;
        }
    }
    fail(ErrorCode::NoConsistentSign, "no sign makes the quadratic form a momentum map; the representation does "
                                      "not preserve the symplectic form");
}

std::vector<Expression> quadratic_momentum(const LinearGAction &a, const SymplecticStructure &omega,
                                           std::uint64_t seed)
{
    if (a.affine()) {
        fail(ErrorCode::InvalidAction, "quadratic momentum needs a linear action; supply affine momenta explicitly");
    }
    return quadratic_momentum(a.algebra_rep(), omega.omega(), seed);
}

Expression augmented_hamiltonian(const HamiltonianSystem &s, const AlgebraVector &xi)
{
    if (xi.size() != s.group().dim()) {
        fail(ErrorCode::DimensionMismatch, "velocity has wrong length");
    }
    Expression out = s.h;
    for (std::size_t i = 0; i < s.momentum.size(); ++i) {
        const double c = xi.coords(static_cast<Eigen::Index>(i));
        if (c != 0.0) {
            out = out - Expression::constant(c, s.dim()) * s.momentum[i];
        }
    }
    return out;
}

MomentumReport verify_momentum_map(const HamiltonianSystem &s, int n_samples, std::uint64_t seed,
                                   const PointSampling &points)
{
    Sampler rng(seed);
    MomentumReport out;
    const LieGroup &g = s.group();
    const int d = g.dim();
    for (int k = 0; k < n_samples; ++k) {
        const Vec m = sample_point(rng, s.dim(), points);
        const Vec v = rng.normal(s.dim());
        const Mat f = s.action.fundamental_matrix(m);
        const Mat jac = s.dphi(m);
        for (int i = 0; i < d; ++i) {
            const double lhs = jac.row(i).dot(v);
            const double rhs = s.omega.form(f.col(i), v);
            out.property_violation = std::max(out.property_violation, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
        }
        const GroupElement el = g.exp(g.random_element(rng, {}, 1.0));
        const CoalgebraVector lhs = s.phi(s.action.act(el, m));
        const CoalgebraVector rhs = g.coadjoint(el, s.phi(m));
        out.equivariance_violation = std::max(out.equivariance_violation,
                                              (lhs.coords - rhs.coords).norm() / (1.0 + rhs.coords.norm()));
        ++out.samples;
    }
    return out;
}

double coadjoint_fixed_defect(const LieGroup &g, const CoalgebraVector &mu)
{
    double worst = 0.0;
    for (int i = 0; i < g.dim(); ++i) {
        const CoalgebraVector r = g.coadjoint_infinitesimal(AlgebraVector(Vec::Unit(g.dim(), i)), mu);
        worst = std::max(worst, r.coords.norm());
    }
    return worst;
}

} // namespace equistab
