#pragma once

#include <cstdint>
#include <vector>

#include "equistab/expr.hpp"
#include "equistab/lie.hpp"
#include "equistab/stability.hpp"
#include "equistab/symplectic.hpp"

namespace equistab {

// Normal-form data at a zero-moment relative equilibrium.
struct MGSData {
    Mat K_basis;   // d x dim k, k = g_m
    Mat k0_basis;  // d x (d - dim k), annihilator of k
    Mat W_basis;   // N x dim W
    Mat omega_W;   // B^T Omega B
    std::vector<Mat> K_rep_on_W;
    std::vector<Expression> PhiW; // one quadratic component per K_basis column
    Splitting split;              // g = k (+) q, orthogonal
    double k0_radius = 0.0;
    double W_radius = 0.0;
    int orbit_dim = 0;
};

MGSData mgs_data(const HamiltonianSystem &s, const Vec &m, double tol = 1e-9);

// <iota(rho), eta> = rho(P eta) where rho is given by its values on the
// columns of split.sub_basis.
CoalgebraVector iota_embed(const Splitting &split, const Vec &rho);

// Ad^dagger(g)(rho + iota(Phi_W(w))), rho given in k0_basis coordinates.
CoalgebraVector mgs_momentum(const MGSData &d, const LieGroup &group, const GroupElement &g, const Vec &rho,
                             const Vec &w);

struct ReductionReport {
    DefinitenessResult on_U;
    DefinitenessResult on_mgs_W;
    bool classes_equal = false;
};

// Compares the class of the augmented Hessian on a caller-supplied complement U
// (from the stability pipeline) with its class on the normal-form slice W.
ReductionReport reduction_check(const HamiltonianSystem &s, const Vec &m, const AlgebraVector &xi, const Mat &U,
                                const MGSData &d);

struct ShadowReport {
    double max_violation = 0.0;
    int samples = 0;
};

// Phi(m + B w) paired with k against Phi_W(w) for w inside the radius.
ShadowReport mgs_shadow_check(const HamiltonianSystem &s, const Vec &m, const MGSData &d, int n_samples,
                              std::uint64_t seed);

} // namespace equistab
