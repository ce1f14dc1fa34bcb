#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "equistab/action.hpp"
#include "equistab/expr.hpp"
#include "equistab/lie.hpp"

namespace equistab {

// Constant symplectic form w(u, v) = u^T Omega v.
class SymplecticStructure {
public:
    explicit SymplecticStructure(Mat omega, double tolerance = 1e-9);

    // "canonical": [[0, I], [-I, 0]] over (q, p); "pairs": 2x2 blocks [[0,1],[-1,0]].
    static SymplecticStructure named(std::string_view keyword, int n);

    const Mat &omega() const { return omega_; }
    const Mat &omega_inverse() const { return inverse_; }
    int dim() const { return static_cast<int>(omega_.rows()); }
    double form(const Vec &u, const Vec &v) const { return u.dot(omega_ * v); }

    // Largest |w(L u, L v) - w(u, v)| over sampled group elements (linear part).
    SampledViolation invariance_violation(const LinearGAction &a, int n_samples, std::uint64_t seed) const;

private:
    Mat omega_;
    Mat inverse_;
};

struct HamiltonianSystem {
    LinearGAction action;
    SymplecticStructure omega;
    Expression h;
    std::vector<Expression> momentum; // component i is <Phi, e_i>

    HamiltonianSystem(LinearGAction a, SymplecticStructure w, Expression ham, std::vector<Expression> mom);

    int dim() const { return action.dim(); }
    const LieGroup &group() const { return action.group(); }

    CoalgebraVector phi(const Vec &m) const;
    // d x N Jacobian of the momentum map.
    Mat dphi(const Vec &m) const;
    // Solution of Omega^T X = grad f.
    Vec field_of(const Expression &f, const Vec &m) const;
    Vec xi_h(const Vec &m) const { return field_of(h, m); }

    // Same system with h - h(m) and momentum components shifted by -Phi(m).
    // The shifted map is still equivariant when Phi(m) is coadjoint-fixed.
    HamiltonianSystem recentered(const Vec &m) const;
};

struct MomentumReport {
    double property_violation = 0.0;
    double equivariance_violation = 0.0;
    int samples = 0;
};

VectorFieldHandle hamiltonian_field(const HamiltonianSystem &s);
VectorFieldHandle hamiltonian_field(const HamiltonianSystem &s, const Expression &f);

// Quadratic momentum c m^T Omega R_i m with the sign fixed by the defining property.
std::vector<Expression> quadratic_momentum(const LinearGAction &a, const SymplecticStructure &omega,
                                           std::uint64_t seed = 7);
// Same construction for a bare list of generator matrices acting on R^n.
std::vector<Expression> quadratic_momentum(const std::vector<Mat> &generators, const Mat &omega,
                                           std::uint64_t seed = 7);

Expression augmented_hamiltonian(const HamiltonianSystem &s, const AlgebraVector &xi);

MomentumReport verify_momentum_map(const HamiltonianSystem &s, int n_samples, std::uint64_t seed,
                                   const PointSampling &points = {});

// Largest |<ad^*(e_i) mu>|: zero iff mu is fixed by the coadjoint action.
double coadjoint_fixed_defect(const LieGroup &g, const CoalgebraVector &mu);

} // namespace equistab
