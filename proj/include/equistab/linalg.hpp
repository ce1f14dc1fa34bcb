#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace equistab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Numerical rank split of a matrix from a full SVD. Singular values above
// rel_cutoff * sigma_max count towards the rank.
struct RankDecomposition {
    Mat range;  // orthonormal basis of the column space
    Mat null;   // orthonormal basis of the null space (right singular vectors)
    Vec singular_values;
    int rank = 0;
    double cutoff = 0.0;
    // Smallest ratio max(s/cutoff, cutoff/s) over nonzero singular values.
    // Values near 1 mean the rank decision is fragile.
    double gap_ratio = 0.0;
};

inline constexpr double default_rank_cutoff = 1e-10;

RankDecomposition rank_decompose(const Mat &a, double rel_cutoff = default_rank_cutoff);

Mat null_space(const Mat &a, double rel_cutoff = default_rank_cutoff);
Mat orthonormal_range(const Mat &a, double rel_cutoff = default_rank_cutoff);

// Orthonormal basis of the Euclidean orthogonal complement of span(cols) in R^n.
Mat orthogonal_complement(const Mat &cols, Eigen::Index n, double rel_cutoff = default_rank_cutoff);

double condition_number(const Mat &a);

Mat from_columns(const std::vector<Vec> &cols, Eigen::Index rows);
std::vector<Vec> to_columns(const Mat &m);

// Scaling-and-squaring Taylor exponential.
Mat expm(const Mat &a);

// Seeded normal sampler; one instance per independent stream.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}
    Sampler(std::uint64_t seed, std::uint64_t stream);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    Vec normal(Eigen::Index n, double scale = 1.0);
    Vec unit(Eigen::Index n);
    Mat normal(Eigen::Index rows, Eigen::Index cols, double scale = 1.0);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace equistab
