#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "equistab/expr.hpp"
#include "equistab/lie.hpp"
#include "equistab/symplectic.hpp"

namespace equistab {

enum class Definiteness { PositiveDefinite, NegativeDefinite, Indefinite, Degenerate };
enum class Verdict { StableModGmu, Inconclusive };

std::string_view to_string(Definiteness d);
std::string_view to_string(Verdict v);

struct Characterization {
    bool is_rel_eq = false;
    bool is_critical = false;
    AlgebraVector xi;
    double residual_field = 0.0;
    double residual_critical = 0.0;
    CoalgebraVector mu;
    Mat g_mu;    // d x k, moment isotropy algebra
    Mat freedom; // d x k, g_m intersected with g_mu
};

struct ComplementBasis {
    Mat kernel_basis;   // N x dim ker dPhi
    Mat orbit_mu_basis; // N x dim T(G_mu m)
    Mat W_basis;        // N x dim W
    double kernel_gap = 0.0;
};

struct DefinitenessResult {
    Definiteness cls = Definiteness::Degenerate;
    Vec eigenvalues;
    double tolerance = 0.0;
};

struct SearchSample {
    Vec t;
    Vec xi;
    double score = 0.0; // max(lambda_min, -lambda_max); positive iff definite
    Definiteness cls = Definiteness::Degenerate;
};

struct StabilityConfig {
    double tol_releq = 1e-9;
    // Absolute nondegeneracy threshold; unset means 1e-8 * max(1, max |lambda|).
    std::optional<double> tol_nondeg;
    double tol_critical = 1e-8;
    double rank_gap_min = 100.0;
    double search_radius = 2.0;
    int grid_points = 9;
    bool polish = true;
};

struct StabilityReport {
    Vec point;
    CoalgebraVector mu;
    AlgebraVector xi;
    double residual_field = 0.0;
    double residual_critical = 0.0;
    int W_dim = 0;
    Mat W_basis;
    Mat hessian;
    Vec eigenvalues;
    Definiteness cls = Definiteness::Degenerate;
    Verdict verdict = Verdict::Inconclusive;
    double nondeg_tol = 0.0;
    std::vector<SearchSample> trace;
    int freedom_dim = 0;
};

Mat moment_isotropy_algebra(const LieGroup &g, const CoalgebraVector &mu);

Characterization characterize(const HamiltonianSystem &s, const Vec &m, double tol = 1e-9);

ComplementBasis slice_complement(const HamiltonianSystem &s, const Vec &m, double rank_gap_min = 100.0);

Mat restricted_hessian(const HamiltonianSystem &s, const Vec &m, const AlgebraVector &xi, const Mat &W_basis,
                       double critical_tol = 1e-8);

DefinitenessResult definiteness(const Mat &h, std::optional<double> nondeg_tol = std::nullopt);

StabilityReport mro_verdict(const HamiltonianSystem &s, const Vec &m, const StabilityConfig &cfg = {});

struct FormLemmaReport {
    DefinitenessResult on_W;
    DefinitenessResult on_W_tilde;
    bool classes_equal = false;
};

// T symmetric n x n; U, W, Wt column bases with R^n = U (+) W = U (+) Wt.
FormLemmaReport restricted_form_lemma_check(const Mat &T, const Mat &U, const Mat &W, const Mat &Wt,
                                            double tol = 1e-9);

struct ComplementTrialReport {
    Definiteness reference = Definiteness::Degenerate;
    std::vector<Definiteness> classes;
    bool all_agree = true;
};

ComplementTrialReport complement_independence_check(const HamiltonianSystem &s, const Vec &m, const AlgebraVector &xi,
                                                    int n_trials, std::uint64_t seed, double mix = 1.0);

struct NewtonConfig {
    double tol = 1e-13;
    int max_iter = 50;
    int continuation_steps = 8;
    double grid_radius = 0.2;
    int grid_points = 11; // per rho-dimension
};

struct MorseBranch {
    int n_rho = 0;
    int n_w = 0;
    std::vector<Vec> rho_grid;
    std::vector<Vec> sigma_grid;
    Expression f;
    NewtonConfig cfg;

    Vec sigma(const Vec &rho) const;
    // max over grid and sampled unit directions y of
    // |f(rho, s + r y) - f(rho, s) - 1/2 r^2 y^T H_W y| with s = sigma(rho).
    double expansion_residual(double r, int n_dirs = 8, std::uint64_t seed = 5) const;
};

// f is an expression over (rho_1..rho_a, w_1..w_b) in that order.
MorseBranch morse_branch(const Expression &f, int n_rho, int n_w, const NewtonConfig &cfg = {});

} // namespace equistab
