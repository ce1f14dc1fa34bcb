#include "equistab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>

#include "equistab/error.hpp"

namespace equistab {

std::string_view to_string(Definiteness d)
{
    switch (d) {
    case Definiteness::PositiveDefinite: return "PositiveDefinite";
    case Definiteness::NegativeDefinite: return "NegativeDefinite";
    case Definiteness::Indefinite: return "Indefinite";
    case Definiteness::Degenerate: return "Degenerate";
    }
    return "Degenerate";
}

std::string_view to_string(Verdict v)
{
    return v == Verdict::StableModGmu ? "StableModGmu" : "Inconclusive";
}

Mat moment_isotropy_algebra(const LieGroup &g, const CoalgebraVector &mu)
{
    const int d = g.dim();
    Mat m(d, d);
    for (int i = 0; i < d; ++i) {
        m.col(i) = g.coadjoint_infinitesimal(AlgebraVector(Vec::Unit(d, i)), mu).coords;
    }
    return null_space(m);
}

namespace {

double omega_scale(const HamiltonianSystem &s)
{
    Eigen::JacobiSVD<Mat> svd(s.omega.omega());
    return svd.singularValues()(0);
}

} // namespace

Characterization characterize(const HamiltonianSystem &s, const Vec &m, double tol)
{
    Characterization out;
    out.mu = s.phi(m);
    out.g_mu = moment_isotropy_algebra(s.group(), out.mu);
    const VectorFieldHandle xh = hamiltonian_field(s);
    const int d = s.group().dim();
    if (out.g_mu.cols() == 0) {
        // Only xi = 0 is admissible.
        out.xi = AlgebraVector(Vec::Zero(d));
        const Vec x = xh(m);
        out.residual_field = x.norm();
        out.is_rel_eq = out.residual_field <= tol * (1.0 + x.norm());
        out.freedom = Mat(d, 0);
    } else {
        const VelocitySolution v = solve_velocity(s.action, xh, m, tol, out.g_mu);
        out.xi = v.xi;
        out.residual_field = v.residual;
        out.is_rel_eq = v.is_rel_eq;
        out.freedom = v.kernel;
    }
    const Expression haug = augmented_hamiltonian(s, out.xi);
    out.residual_critical = haug.gradient(m).norm();
    const double field_norm = xh(m).norm();
    out.is_critical = out.residual_critical <= omega_scale(s) * tol * (1.0 + field_norm);
    return out;
}

ComplementBasis slice_complement(const HamiltonianSystem &s, const Vec &m, double rank_gap_min)
{
    const int n = s.dim();
    ComplementBasis out;
    const RankDecomposition rd = rank_decompose(s.dphi(m));
    out.kernel_gap = rd.gap_ratio;
    if (rd.gap_ratio < rank_gap_min) {
        fail(ErrorCode::RankAmbiguous, "momentum Jacobian singular values sit within a factor " +
                                           std::to_string(rd.gap_ratio) + " of the rank cutoff");
    }
    out.kernel_basis = rd.null;
    const CoalgebraVector mu = s.phi(m);
    const Mat g_mu = moment_isotropy_algebra(s.group(), mu);
    const Mat orbit = s.action.fundamental_matrix(m) * g_mu;
    const Mat &k = out.kernel_basis;
    out.orbit_mu_basis = orthonormal_range(k * (k.transpose() * orbit));
    if (out.orbit_mu_basis.cols() == 0) {
        out.orbit_mu_basis = Mat(n, 0);
    }
    if (k.cols() == 0) {
        out.W_basis = Mat(n, 0);
        return out;
    }
    const Mat inside = orthogonal_complement(k.transpose() * out.orbit_mu_basis, k.cols());
    out.W_basis = k * inside;
    if (out.W_basis.cols() == 0) {
        out.W_basis = Mat(n, 0);
    }
    return out;
}

Mat restricted_hessian(const HamiltonianSystem &s, const Vec &m, const AlgebraVector &xi, const Mat &W_basis,
                       double critical_tol)
{
    const Expression haug = augmented_hamiltonian(s, xi);
    const double g = haug.gradient(m).norm();
    const double scale = 1.0 + s.h.gradient(m).norm();
    if (g > critical_tol * scale) {
        fail(ErrorCode::HessianIllDefined, "point is not critical for the augmented hamiltonian (|grad| = " +
                                               std::to_string(g) + ")");
    }
    const Mat h = haug.hessian(m);
    const Mat r = W_basis.transpose() * h * W_basis;
    return 0.5 * (r + r.transpose());
}

DefinitenessResult definiteness(const Mat &h, std::optional<double> nondeg_tol)
{
    if (h.rows() != h.cols()) {
        fail(ErrorCode::NotSymmetric, "form matrix is not square");
    }
    DefinitenessResult out;
    if (h.rows() == 0) {
        out.eigenvalues = Vec(0);
        out.tolerance = nondeg_tol.value_or(1e-8);
        return out;
    }
    if ((h - h.transpose()).norm() > 1e-10 * (1.0 + h.norm())) {
        fail(ErrorCode::NotSymmetric, "form matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
    out.eigenvalues = es.eigenvalues();
    const double lo = out.eigenvalues.minCoeff();
    const double hi = out.eigenvalues.maxCoeff();
    out.tolerance = nondeg_tol.value_or(1e-8 * std::max(1.0, out.eigenvalues.cwiseAbs().maxCoeff()));
    if (out.eigenvalues.cwiseAbs().minCoeff() <= out.tolerance) {
        out.cls = Definiteness::Degenerate;
    } else if (lo > out.tolerance) {
        out.cls = Definiteness::PositiveDefinite;
    } else if (hi < -out.tolerance) {
        out.cls = Definiteness::NegativeDefinite;
    } else {
        out.cls = Definiteness::Indefinite;
    }
    return out;
}

namespace {

// Nelder-Mead maximisation in a few dimensions.
Vec nelder_mead_max(const std::function<double(const Vec &)> &f, const Vec &start, double scale, int max_evals)
{
    const Eigen::Index k = start.size();
    std::vector<Vec> pts{start};
    for (Eigen::Index i = 0; i < k; ++i) {
        Vec p = start;
        p(i) += scale;
        pts.push_back(p);
    }
    std::vector<double> vals;
    for (const auto &p : pts) {
        vals.push_back(f(p));
    }
    int evals = static_cast<int>(pts.size());
    while (evals < max_evals) {
        std::vector<std::size_t> order(pts.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
        std::vector<Vec> p2;
        std::vector<double> v2;
        for (auto i : order) {
            p2.push_back(pts[i]);
            v2.push_back(vals[i]);
        }
        pts = std::move(p2);
        vals = std::move(v2);
        if (std::abs(vals.front() - vals.back()) <= 1e-12 * (1.0 + std::abs(vals.front()))) {
            break;
        }
        Vec centroid = Vec::Zero(k);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            centroid += pts[i];
        }
        centroid /= static_cast<double>(k);
        const Vec &worst = pts.back();
        const Vec refl = centroid + (centroid - worst);
        const double fr = f(refl);
        ++evals;
        if (fr > vals.front()) {
            const Vec exp = centroid + 2.0 * (centroid - worst);
            const double fe = f(exp);
            ++evals;
            if (fe > fr) {
                pts.back() = exp;
                vals.back() = fe;
            } else {
                pts.back() = refl;
                vals.back() = fr;
            }
        } else if (fr > vals[vals.size() - 2]) {
            pts.back() = refl;
            vals.back() = fr;
        } else {
            const Vec con = centroid + 0.5 * (worst - centroid);
            const double fc = f(con);
            ++evals;
            if (fc > vals.back()) {
                pts.back() = con;
                vals.back() = fc;
            } else {
                for (std::size_t i = 1; i < pts.size(); ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    vals[i] = f(pts[i]);
                    ++evals;
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < vals.size(); ++i) {
        if (vals[i] > vals[best]) {
            best = i;
        }
    }
    return pts[best];
}

double margin(const DefinitenessResult &r)
{
    if (r.eigenvalues.size() == 0) {
        return -std::numeric_limits<double>::infinity();
    }
    return std::max(r.eigenvalues.minCoeff(), -r.eigenvalues.maxCoeff());
}

bool is_definite(Definiteness c)
{
    return c == Definiteness::PositiveDefinite || c == Definiteness::NegativeDefinite;
}

} // namespace

StabilityReport mro_verdict(const HamiltonianSystem &s, const Vec &m, const StabilityConfig &cfg)
{
    const Characterization ch = characterize(s, m, cfg.tol_releq);
    if (!ch.is_rel_eq) {
        fail(ErrorCode::PreconditionFailed, "point is not a relative equilibrium (field residual " +
                                                std::to_string(ch.residual_field) + ")");
    }
    const double fixed = coadjoint_fixed_defect(s.group(), ch.mu);
    if (fixed > 1e-9 * (1.0 + ch.mu.coords.norm())) {
        fail(ErrorCode::PreconditionFailed, "momentum value is not fixed by the coadjoint action");
    }
    const ComplementBasis comp = slice_complement(s, m, cfg.rank_gap_min);

    StabilityReport rep;
    rep.point = m;
    rep.mu = ch.mu;
    rep.residual_field = ch.residual_field;
    rep.W_dim = static_cast<int>(comp.W_basis.cols());
    rep.W_basis = comp.W_basis;
    rep.freedom_dim = static_cast<int>(ch.freedom.cols());

    const Eigen::Index k = ch.freedom.cols();
    auto evaluate = [&](const Vec &t) {
        SearchSample smp;
        smp.t = t;
        smp.xi = ch.xi.coords + ch.freedom * t;
        const Mat h = restricted_hessian(s, m, AlgebraVector(smp.xi), comp.W_basis, cfg.tol_critical);
        const DefinitenessResult dr = definiteness(h, cfg.tol_nondeg);
        smp.cls = dr.cls;
        smp.score = margin(dr);
        return smp;
    };

    std::vector<SearchSample> samples;
    if (k == 0) {
        samples.push_back(evaluate(Vec(0)));
    } else {
        const int n = std::max(1, cfg.grid_points);
        long total = 1;
        for (Eigen::Index i = 0; i < k; ++i) {
            total *= n;
        }
        for (long idx = 0; idx < total; ++idx) {
            Vec t(k);
            long rest = idx;
            for (Eigen::Index i = 0; i < k; ++i) {
                const int j = static_cast<int>(rest % n);
                rest /= n;
                t(i) = n == 1 ? 0.0 : -cfg.search_radius + 2.0 * cfg.search_radius * j / (n - 1);
            }
            samples.push_back(evaluate(t));
        }
        if (cfg.polish && rep.W_dim > 0) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < samples.size(); ++i) {
                if (samples[i].score > samples[best].score) {
                    best = i;
                }
            }
            const double step = n > 1 ? 2.0 * cfg.search_radius / (n - 1) : cfg.search_radius;
            const Vec t = nelder_mead_max([&](const Vec &x) { return evaluate(x).score; }, samples[best].t,
                                          0.5 * step, 200);
            samples.push_back(evaluate(t));
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const bool hit_i = is_definite(samples[i].cls);
        const bool hit_b = is_definite(samples[best].cls);
        if ((hit_i && !hit_b) || (hit_i == hit_b && samples[i].score > samples[best].score)) {
            best = i;
        }
    }
    const SearchSample &chosen = samples[best];
    rep.xi = AlgebraVector(chosen.xi);
    rep.residual_critical = augmented_hamiltonian(s, rep.xi).gradient(m).norm();
    rep.hessian = restricted_hessian(s, m, rep.xi, comp.W_basis, cfg.tol_critical);
    const DefinitenessResult dr = definiteness(rep.hessian, cfg.tol_nondeg);
    rep.eigenvalues = dr.eigenvalues;
    rep.cls = dr.cls;
    rep.nondeg_tol = dr.tolerance;
    rep.verdict = is_definite(dr.cls) ? Verdict::StableModGmu : Verdict::Inconclusive;
    rep.trace = std::move(samples);
    return rep;
}

FormLemmaReport restricted_form_lemma_check(const Mat &T, const Mat &U, const Mat &W, const Mat &Wt, double tol)
{
    const Eigen::Index n = T.rows();
    if (T.cols() != n || U.rows() != n || W.rows() != n || Wt.rows() != n) {
        fail(ErrorCode::DimensionMismatch, "form and subspace bases have inconsistent sizes");
    }
    auto check_sum = [&](const Mat &c, const char *name) {
        if (U.cols() + c.cols() != n) {
            fail(ErrorCode::PreconditionFailed, std::string("dim U + dim ") + name + " differs from dim V");
        }
        Mat both(n, n);
        both << U, c;
        if (n > 0 && rank_decompose(both, 1e-10).rank != n) {
            fail(ErrorCode::PreconditionFailed, std::string("U and ") + name + " are not complementary");
        }
    };
    check_sum(W, "W");
    check_sum(Wt, "W~");
    if ((T - T.transpose()).norm() > 1e-10 * (1.0 + T.norm())) {
        fail(ErrorCode::NotSymmetric, "bilinear form is not symmetric");
    }
    for (Eigen::Index i = 0; i < U.cols(); ++i) {
        const double r = (T * U.col(i)).norm();
        if (r > tol * (1.0 + T.norm()) * (1.0 + U.col(i).norm())) {
            fail(ErrorCode::PreconditionFailed, "U is not contained in the kernel of the form");
        }
    }
    FormLemmaReport out;
    const Mat tw = W.transpose() * T * W;
    const Mat twt = Wt.transpose() * T * Wt;
    out.on_W = definiteness(0.5 * (tw + tw.transpose()));
    out.on_W_tilde = definiteness(0.5 * (twt + twt.transpose()));
    out.classes_equal = out.on_W.cls == out.on_W_tilde.cls;
    return out;
}

ComplementTrialReport complement_independence_check(const HamiltonianSystem &s, const Vec &m, const AlgebraVector &xi,
                                                    int n_trials, std::uint64_t seed, double mix)
{
    const ComplementBasis comp = slice_complement(s, m);
    ComplementTrialReport out;
    out.reference = definiteness(restricted_hessian(s, m, xi, comp.W_basis)).cls;
    Sampler rng(seed);
    const Eigen::Index w = comp.W_basis.cols();
    const Eigen::Index o = comp.orbit_mu_basis.cols();
    for (int t = 0; t < n_trials; ++t) {
        Mat wt = comp.W_basis;
        if (o > 0 && w > 0) {
            wt += comp.orbit_mu_basis * rng.normal(o, w, mix);
        }
        // A random invertible recombination inside the complement.
        if (w > 0) {
            Mat mixm = Mat::Identity(w, w) + 0.3 * rng.normal(w, w, 1.0);
            while (std::abs(mixm.determinant()) < 0.1) {
                mixm += Mat::Identity(w, w);
            }
            wt = wt * mixm;
        }
        const Definiteness c = definiteness(restricted_hessian(s, m, xi, wt)).cls;
        out.classes.push_back(c);
        out.all_agree = out.all_agree && c == out.reference;
    }
    return out;
}

namespace {

Vec join(const Vec &rho, const Vec &w)
{
    Vec x(rho.size() + w.size());
    x << rho, w;
    return x;
}

} // namespace

Vec MorseBranch::sigma(const Vec &rho) const
{
    if (rho.size() != n_rho) {
        fail(ErrorCode::DimensionMismatch, "rho has wrong length");
    }
    Vec w = Vec::Zero(n_w);
    const int steps = std::max(1, cfg.continuation_steps);
    for (int s = 1; s <= steps; ++s) {
        const Vec r = rho * (static_cast<double>(s) / steps);
        bool converged = false;
        for (int it = 0; it < cfg.max_iter; ++it) {
            const Vec x = join(r, w);
            const Vec g = f.gradient(x).tail(n_w);
            if (g.norm() <= cfg.tol) {
                converged = true;
                break;
            }
            const Mat h = f.hessian(x).bottomRightCorner(n_w, n_w);
            const Vec step = h.ldlt().solve(-g);
            if (!step.allFinite()) {
                break;
            }
            w += step;
            if (step.norm() <= 1e-15 * (1.0 + w.norm())) {
                converged = f.gradient(join(r, w)).tail(n_w).norm() <= 1e3 * cfg.tol;
                break;
            }
        }
        if (!converged) {
            fail(ErrorCode::NewtonDiverged, "Newton continuation for the critical branch did not converge");
        }
    }
    return w;
}

double MorseBranch::expansion_residual(double r, int n_dirs, std::uint64_t seed) const
{
    Sampler rng(seed);
    std::vector<Vec> dirs;
    for (int i = 0; i < n_dirs; ++i) {
        dirs.push_back(n_w == 1 ? Vec::Constant(1, i % 2 == 0 ? 1.0 : -1.0) : rng.unit(n_w));
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < rho_grid.size(); ++k) {
        const Vec &rho = rho_grid[k];
        const Vec &s = sigma_grid[k];
        const double f0 = f.eval(join(rho, s));
        const Mat h = f.hessian(join(rho, s)).bottomRightCorner(n_w, n_w);
        for (const auto &y : dirs) {
            const double quad = 0.5 * r * r * y.dot(h * y);
            worst = std::max(worst, std::abs(f.eval(join(rho, s + r * y)) - f0 - quad));
        }
    }
    return worst;
}

MorseBranch morse_branch(const Expression &f, int n_rho, int n_w, const NewtonConfig &cfg)
{
    if (n_rho < 0 || n_w <= 0 || f.n_vars() != n_rho + n_w) {
        fail(ErrorCode::DimensionMismatch, "family must be an expression in rho_1..rho_a, w_1..w_b");
    }
    const Vec zero = Vec::Zero(n_rho + n_w);
    if (std::abs(f.eval(zero)) > 1e-12) {
        fail(ErrorCode::PreconditionFailed, "family does not vanish at the origin");
    }
    if (f.gradient(zero).tail(n_w).norm() > 1e-10) {
        fail(ErrorCode::PreconditionFailed, "origin is not critical in the w directions");
    }
    const DefinitenessResult d0 = definiteness(f.hessian(zero).bottomRightCorner(n_w, n_w));
    if (d0.cls != Definiteness::PositiveDefinite) {
        fail(ErrorCode::NotPositiveDefinite, "second derivative in w at the origin is not positive definite");
    }
    MorseBranch out;
    out.n_rho = n_rho;
    out.n_w = n_w;
    out.f = f;
    out.cfg = cfg;
    const int g = std::max(1, cfg.grid_points);
    long total = 1;
    for (int i = 0; i < n_rho; ++i) {
        total *= g;
    }
    for (long idx = 0; idx < total; ++idx) {
        Vec rho(n_rho);
        long rest = idx;
        for (int i = 0; i < n_rho; ++i) {
            const int j = static_cast<int>(rest % g);
            rest /= g;
            rho(i) = g == 1 ? 0.0 : -cfg.grid_radius + 2.0 * cfg.grid_radius * j / (g - 1);
        }
        out.rho_grid.push_back(rho);
        out.sigma_grid.push_back(out.sigma(rho));
    }
    return out;
}

} // namespace equistab
