#include "equistab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace equistab {

RankDecomposition rank_decompose(const Mat &a, double rel_cutoff)
{
    RankDecomposition out;
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    if (rows == 0 || cols == 0) {
        out.range = Mat(rows, 0);
        out.null = Mat::Identity(cols, cols);
        out.singular_values = Vec(0);
        out.gap_ratio = std::numeric_limits<double>::infinity();
        return out;
    }
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.singular_values = svd.singularValues();
    const double smax = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
    out.cutoff = smax * rel_cutoff;
    int rank = 0;
    if (smax > std::numeric_limits<double>::min()) {
        for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
            if (out.singular_values(i) > out.cutoff) {
                ++rank;
            }
        }
    }
    out.rank = rank;
    out.range = svd.matrixU().leftCols(rank);
    out.null = svd.matrixV().rightCols(cols - rank);

    out.gap_ratio = std::numeric_limits<double>::infinity();
    if (out.cutoff > 0.0) {
        for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
            const double s = out.singular_values(i);
            if (s <= 0.0) {
                continue;
            }
            out.gap_ratio = std::min(out.gap_ratio, std::max(s / out.cutoff, out.cutoff / s));
        }
    }
    return out;
}

Mat null_space(const Mat &a, double rel_cutoff)
{
    return rank_decompose(a, rel_cutoff).null;
}

Mat orthonormal_range(const Mat &a, double rel_cutoff)
{
    return rank_decompose(a, rel_cutoff).range;
}

Mat orthogonal_complement(const Mat &cols, Eigen::Index n, double rel_cutoff)
{
    if (cols.cols() == 0) {
        return Mat::Identity(n, n);
    }
    return null_space(cols.transpose(), rel_cutoff);
}

double condition_number(const Mat &a)
{
    if (a.size() == 0) {
        return 1.0;
    }
    Eigen::JacobiSVD<Mat> svd(a);
    const auto &s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return s(0) / smin;
}

Mat from_columns(const std::vector<Vec> &cols, Eigen::Index rows)
{
    Mat m(rows, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        m.col(static_cast<Eigen::Index>(i)) = cols[i];
    }
    return m;
}

std::vector<Vec> to_columns(const Mat &m)
{
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        out.emplace_back(m.col(i));
    }
    return out;
}

Mat expm(const Mat &a)
{
    const Eigen::Index n = a.rows();
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const Mat scaled = a / std::ldexp(1.0, squarings);

    // ||scaled|| <= 0.5, so 0.5^k / k! drops below 1e-20 well before k = 22.
    Mat result = Mat::Identity(n, n);
    Mat term = Mat::Identity(n, n);
    for (int k = 1; k <= 22; ++k) {
        term = term * scaled / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-20) {
            break;
        }
    }
    for (int i = 0; i < squarings; ++i) {
        result = result * result;
    }
    return result;
}

Sampler::Sampler(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

Vec Sampler::normal(Eigen::Index n, double scale)
{
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = scale * normal_(engine_);
    }
    return v;
}

Vec Sampler::unit(Eigen::Index n)
{
    if (n == 0) {
        return Vec(0);
    }
    Vec v = normal(n);
    while (v.norm() < 1e-12) {
        v = normal(n);
    }
    return v / v.norm();
}

Mat Sampler::normal(Eigen::Index rows, Eigen::Index cols, double scale)
{
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = scale * normal_(engine_);
        }
    }
    return m;
}

} // namespace equistab
