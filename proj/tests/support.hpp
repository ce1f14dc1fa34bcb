#pragma once

#include <cmath>
#include <string>

#include "equistab/model.hpp"

namespace test {

using equistab::Mat;
using equistab::Vec;

inline Vec vec(std::initializer_list<double> v)
{
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out(i++) = x;
    }
    return out;
}

inline std::string demo(const std::string &name)
{
    return std::string(EQUISTAB_DEMOS) + "/" + name;
}

inline equistab::Model load_demo(const std::string &name)
{
    return equistab::load_model(demo(name));
}

// Central force with potential v(r) written in r = sqrt(x1^2+x2^2).
inline equistab::HamiltonianSystem central_force(const std::string &potential)
{
    using namespace equistab;
    LieGroup g = LieGroup::catalog("SO2");
    LinearGAction a = LinearGAction::catalog(g, "cotangent_lift");
    SymplecticStructure w = SymplecticStructure::named("canonical", 4);
    Expression h = Expression::parse("0.5*(x3^2 + x4^2) + " + potential, 4);
    return HamiltonianSystem(a, w, h, quadratic_momentum(a, w));
}

inline equistab::HamiltonianSystem kepler()
{
    return central_force("(-1/sqrt(x1^2 + x2^2))");
}

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

} // namespace test
