#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "equistab/linalg.hpp"

namespace equistab {

// Coordinates of a Lie algebra element in the group's algebra basis.
struct AlgebraVector {
    Vec coords;

    AlgebraVector() = default;
    explicit AlgebraVector(Vec c) : coords(std::move(c)) {}
    Eigen::Index size() const { return coords.size(); }
};

// Coordinates of a dual element in the dual basis; pairing is coords . xi.coords.
struct CoalgebraVector {
    Vec coords;

    CoalgebraVector() = default;
    explicit CoalgebraVector(Vec c) : coords(std::move(c)) {}
    Eigen::Index size() const { return coords.size(); }
};

inline double pairing(const CoalgebraVector &mu, const AlgebraVector &xi)
{
    return mu.coords.dot(xi.coords);
}

// A group element as an ambient n x n matrix. When it was built from
// exponentials, `word` holds the algebra vectors whose exponentials multiply
// (left to right) to `matrix`; representations use it to act without a logarithm.
struct GroupElement {
    Mat matrix;
    std::optional<std::vector<Vec>> word;
};

// g = h (+) q with the projector onto h along q.
struct Splitting {
    std::vector<AlgebraVector> sub_basis;
    std::vector<AlgebraVector> comp_basis;
    Mat projector;

    Mat sub_matrix() const;
    Mat comp_matrix() const;
};

struct NormSuite {
    double norm_g = 0.0;
    double norm_dual = 0.0;
    double norm_sup = 0.0;
};

struct AdInvarianceReport {
    double max_violation = 0.0;
    int samples = 0;
};

using MembershipResidual = std::function<double(const Mat &)>;

class LieGroup {
public:
    // `inner_product` defaults to the trace form tr(e_i^T e_j). `compact_basis`
    // spans the subalgebra on which Ad-invariance of the inner product is
    // expected (defaults to the whole algebra).
    LieGroup(std::string name, std::vector<Mat> basis, std::optional<Mat> inner_product = std::nullopt,
             MembershipResidual membership = {}, double tolerance = 1e-9,
             std::optional<std::vector<Vec>> compact_basis = std::nullopt);

    // "SO2", "SO3", "T<k>", "SE2".
    static LieGroup catalog(std::string_view name);

    const std::string &name() const { return name_; }
    int ambient_dim() const { return n_; }
    int dim() const { return d_; }
    double tolerance() const { return tolerance_; }
    const std::vector<Mat> &basis() const { return basis_; }
    const Mat &inner_product() const { return inner_; }
    const Mat &inner_product_inverse() const { return inner_inv_; }
    const std::vector<Vec> &compact_basis() const { return compact_; }

    // c^k_{ij} with [e_i, e_j] = sum_k c^k_{ij} e_k.
    double structure_constant(int k, int i, int j) const { return structure_[(k * d_ + i) * d_ + j]; }

    double membership_residual(const Mat &g) const;

    Mat to_matrix(const AlgebraVector &xi) const;
    // Least-squares re-expansion in the algebra basis; NotInAlgebra above tolerance.
    AlgebraVector expand(const Mat &x) const;

    GroupElement identity() const;
    GroupElement exp(const AlgebraVector &xi) const;
    GroupElement multiply(const GroupElement &g, const GroupElement &h) const;
    GroupElement inverse(const GroupElement &g) const;

    AlgebraVector bracket(const AlgebraVector &xi, const AlgebraVector &eta) const;
    // Matrix of eta -> [xi, eta] in algebra coordinates.
    Mat ad_matrix(const AlgebraVector &xi) const;
    // Matrix of xi -> Ad(g) xi in algebra coordinates.
    Mat adjoint_matrix(const GroupElement &g) const;
    AlgebraVector adjoint(const GroupElement &g, const AlgebraVector &xi) const;
    CoalgebraVector coadjoint(const GroupElement &g, const CoalgebraVector &mu) const;
    // Infinitesimal coadjoint action: d/dt|0 Ad^dagger(exp(t xi)) mu.
    CoalgebraVector coadjoint_infinitesimal(const AlgebraVector &xi, const CoalgebraVector &mu) const;

    std::vector<CoalgebraVector> annihilator(const std::vector<AlgebraVector> &sub_basis) const;
    Splitting orthogonal_splitting(const std::vector<AlgebraVector> &sub_basis) const;
    // Splitting with an explicitly chosen complement.
    Splitting splitting(const std::vector<AlgebraVector> &sub_basis,
                        const std::vector<AlgebraVector> &comp_basis) const;

    // Subalgebra {eta : [eta, xi] = 0}.
    std::vector<AlgebraVector> centralizer(const AlgebraVector &xi) const;

    double inner(const AlgebraVector &xi, const AlgebraVector &eta) const;
    double norm(const AlgebraVector &xi) const;
    double dual_norm(const CoalgebraVector &mu) const;
    // sup over unit-norm xi of |<mu, xi>|, evaluated in closed form.
    double sup_norm(const CoalgebraVector &mu) const;
    NormSuite norm_suite(const AlgebraVector &xi) const;
    NormSuite norm_suite(const CoalgebraVector &mu) const;
    // Smallest A with ||.||_sup <= A ||.||_dual; the closed forms coincide
    // for the dual inner product, so this is 1.
    double sup_vs_dual_constant() const { return 1.0; }

    // Samples g = exp(xi) with xi drawn from `sub_basis` (compact factor when empty).
    AdInvarianceReport verify_ad_invariance(int n_samples, std::uint64_t seed,
                                            const std::vector<Vec> &sub_basis = {}) const;

    AlgebraVector random_element(Sampler &rng, const std::vector<Vec> &sub_basis, double scale) const;

private:
    void check_dim(const AlgebraVector &xi) const;
    void check_dim(const CoalgebraVector &mu) const;

    std::string name_;
    int n_ = 0;
    int d_ = 0;
    std::vector<Mat> basis_;
    Mat flat_;      // n^2 x d, columns are vectorised basis matrices
    Mat flat_pinv_; // d x n^2
    std::vector<double> structure_;
    Mat inner_;
    Mat inner_inv_;
    MembershipResidual membership_;
    double tolerance_;
    std::vector<Vec> compact_;
    bool abelian_ = true;
};

std::vector<AlgebraVector> as_algebra_vectors(const Mat &cols);
Mat algebra_matrix(const std::vector<AlgebraVector> &vs, Eigen::Index d);

// Intersection of two subspaces of R^d given as column bases.
Mat subspace_intersection(const Mat &a, const Mat &b, double rel_cutoff = default_rank_cutoff);

} // namespace equistab
