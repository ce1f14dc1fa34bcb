#include <cmath>
#include <thread>

#include "doctest.h"

#include "equistab/action.hpp"
#include "equistab/error.hpp"
#include "equistab/expr.hpp"
#include "support.hpp"

using namespace equistab;
using test::vec;

namespace {

Vec fd_gradient(const Expression &e, const Vec &x, double h = 1e-5)
{
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec a = x, b = x;
        a(i) += h;
        b(i) -= h;
        g(i) = (e.eval(a) - e.eval(b)) / (2 * h);
    }
    return g;
}

template <typename F>
ParseError parse_error_of(F &&f)
{
    try {
        f();
    } catch (const ParseError &e) {
        return e;
    }
    FAIL("no ParseError raised");
    return ParseError(0, "", "");
}

} // namespace

TEST_CASE("parse examples")
{
    const Expression v = Expression::parse("x1", 3);
    CHECK(v.root().op == ExprOp::Variable);
    CHECK(v.root().index == 1);
    CHECK(Expression::parse("0.5*(x1^2 + x2^2)", 2).eval(vec({1, 0})) == 0.5);

    const ParseError e = parse_error_of([] { Expression::parse("x1 ^", 1); });
    CHECK(e.position() == 4);
    CHECK(e.code() == ErrorCode::ParseError);

    CHECK(parse_error_of([] { Expression::parse("", 1); }).position() == 0);
    CHECK(parse_error_of([] { Expression::parse("(x1 + 2", 1); }).position() == 7);
    CHECK(parse_error_of([] { Expression::parse("x1 x2", 2); }).position() == 3);

    try {
        Expression::parse("tan(x1)", 1);
        FAIL("expected UnknownFunction");
    } catch (const Error &err) {
        CHECK(err.code() == ErrorCode::UnknownFunction);
    }
    try {
        Expression::parse("x1 + x3", 2);
        FAIL("expected VariableOutOfRange");
    } catch (const Error &err) {
        CHECK(err.code() == ErrorCode::VariableOutOfRange);
    }
    CHECK_THROWS_AS(Expression::parse("x0", 2), Error);
}

TEST_CASE("precedence and associativity")
{
    const Vec x = vec({3, 2});
    CHECK(Expression::parse("x1 - x2 - 1", 2).eval(x) == 0.0);
    CHECK(Expression::parse("x1 / x2 / 3", 2).eval(x) == doctest::Approx(0.5));
    CHECK(Expression::parse("-x1^2", 2).eval(x) == -9.0);
    CHECK(Expression::parse("(-x1)^2", 2).eval(x) == 9.0);
    CHECK(Expression::parse("2*x1^2*x2", 2).eval(x) == 36.0);
    CHECK(Expression::parse("x2^-2", 2).eval(x) == 0.25);
    CHECK(Expression::parse(" 1e-1 *  x1 ", 2).eval(x) == doctest::Approx(0.3));
}

TEST_CASE("eval examples and domain guards")
{
    CHECK(Expression::parse("1", 2).eval(vec({5, -7})) == 1.0);
    CHECK(Expression::parse("sin(x1)", 1).eval(vec({0})) == 0.0);
    CHECK(Expression::parse("-1/sqrt(x1^2+x2^2)", 2).eval(vec({1, 0})) == -1.0);
    CHECK(Expression::parse("exp(x1) + cos(x1)", 1).eval(vec({0})) == 2.0);
    try {
        Expression::parse("sqrt(x1)", 1).eval(vec({-1}));
        FAIL("expected DomainError");
    } catch (const Error &err) {
        CHECK(err.code() == ErrorCode::DomainError);
    }
    try {
        Expression::parse("1/x1", 1).eval(vec({0}));
        FAIL("expected DomainError");
    } catch (const Error &err) {
        CHECK(err.code() == ErrorCode::DomainError);
    }
    CHECK_THROWS_AS(Expression::parse("x1", 2).eval(vec({1})), Error);
}

TEST_CASE("gradient and hessian examples")
{
    CHECK(Expression::parse("4.5", 3).gradient(vec({1, 2, 3})).norm() == 0.0);
    CHECK((Expression::parse("0.5*(x1^2+x2^2)", 2).gradient(vec({1, 0})) - vec({1, 0})).norm() == 0.0);
    CHECK((Expression::parse("x1*x2", 2).gradient(vec({2, 3})) - vec({3, 2})).norm() == 0.0);

    CHECK(Expression::parse("3*x1 - x2 + 2", 2).hessian(vec({0.3, 9})).norm() == 0.0);
    Sampler rng(1);
    for (int k = 0; k < 5; ++k) {
        CHECK((Expression::parse("0.5*(x1^2+x2^2)", 2).hessian(rng.normal(2)) - Mat::Identity(2, 2)).norm() ==
              0.0);
    }
    Mat oracle(2, 2);
    oracle << 2, 2, 2, 0;
    CHECK((Expression::parse("x1^2*x2", 2).hessian(vec({1, 1})) - oracle).norm() < 1e-14);
}

TEST_CASE("derivatives agree with finite differences")
{
    const char *texts[] = {"0.5*(x3^2 + x4^2) - 1/sqrt(x1^2 + x2^2)",
                           "sin(x1*x2) + exp(-x3^2)*cos(x4)",
                           "(x1 - 2*x2)^3 / (1 + x3^2 + x4^4)",
                           "sqrt(1 + x1^2 + x2^2)^3 - x4^-2"};
    Sampler rng(7);
    for (const char *t : texts) {
        const Expression e = Expression::parse(t, 4);
        for (int k = 0; k < 50; ++k) {
            Vec x = rng.normal(4);
            x(3) = 0.5 + std::abs(x(3));
            x(0) += 1.5;
            const Vec g = e.gradient(x);
            const Vec fd = fd_gradient(e, x);
            CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
            const Mat h = e.hessian(x);
            CHECK((h - h.transpose()).norm() == 0.0);
            Mat fdh(4, 4);
            for (int i = 0; i < 4; ++i) {
                Vec a = x, b = x;
                a(i) += 1e-5;
                b(i) -= 1e-5;
                fdh.col(i) = (e.gradient(a) - e.gradient(b)) / 2e-5;
            }
            CHECK((h - fdh).norm() <= 1e-5 * std::max(1.0, h.norm()));
        }
    }
}

TEST_CASE("hessian does not depend on variable order")
{
    const Expression a = Expression::parse("x1^2*x2 + sin(x1*x3)", 3);
    const Expression b = Expression::parse("x3^2*x2 + sin(x3*x1)", 3);
    const Vec x = vec({0.4, -1.3, 0.9});
    const Vec xs = vec({0.9, -1.3, 0.4});
    Mat perm = Mat::Zero(3, 3);
    perm(0, 2) = perm(1, 1) = perm(2, 0) = 1.0;
    CHECK((a.hessian(x) - perm * b.hessian(xs) * perm.transpose()).norm() < 1e-14);
}

TEST_CASE("print parse round trip")
{
    const char *texts[] = {"x1", "-x1^2", "(-x1)^2", "x1 - (x2 - x3)", "x1/(x2*x3)", "-(x1 + 2)*3",
                           "0.5*(x3^2 + x4^2) - 1/sqrt(x1^2 + x2^2)", "sin(cos(exp(x2)))^-3", "1e-300 + 1.25e+20",
                           "x1 - -x2", "2^3", "-3 - x1"};
    for (const char *t : texts) {
        const Expression e = Expression::parse(t, 4);
        const std::string printed = e.to_string();
        const Expression back = Expression::parse(printed, 4);
        CHECK_MESSAGE(e.structurally_equal(back), t << " -> " << printed);
        CHECK(back.to_string() == printed);
    }
    // random trees from the builder operators
    Sampler rng(9);
    for (int k = 0; k < 200; ++k) {
        Expression e = Expression::variable(1 + static_cast<int>(rng.uniform() * 3), 3);
        for (int depth = 0; depth < 6; ++depth) {
            const Expression leaf = rng.uniform() < 0.5
                                        ? Expression::variable(1 + static_cast<int>(rng.uniform() * 3), 3)
                                        : Expression::constant(std::round(rng.normal() * 100) / 8, 3);
            const int op = static_cast<int>(rng.uniform() * 7);
            switch (op) {
            case 0: e = e + leaf; break;
            case 1: e = leaf - e; break;
            case 2: e = e * leaf; break;
            case 3: e = leaf / e; break;
            case 4: e = -e; break;
            case 5: e = pow(e, 2 + static_cast<int>(rng.uniform() * 2)); break;
            default: e = sin(e); break;
            }
        }
        const Expression back = Expression::parse(e.to_string(), 3);
        CHECK(e.structurally_equal(back));
    }
}

TEST_CASE("invariance checks")
{
    const LieGroup so2 = LieGroup::catalog("SO2");
    const LinearGAction a = LinearGAction::catalog(so2, "standard");
    CHECK(check_invariance(Expression::parse("x1^2+x2^2", 2), a, 100, 1).max_violation <= 1e-10);
    CHECK(check_invariance(Expression::parse("x1", 2), a, 100, 1).max_violation > 0.1);
    CHECK(check_invariance(Expression::parse("2", 2), a, 100, 1).max_violation == 0.0);
}

TEST_CASE("evaluation is thread safe")
{
    const Expression e = Expression::parse("0.5*(x3^2 + x4^2) - 1/sqrt(x1^2 + x2^2)", 4);
    const Vec x = vec({1, 0.5, -0.2, 0.7});
    const Mat ref = e.hessian(x);
    bool ok[4] = {true, true, true, true};
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int k = 0; k < 500; ++k) {
                ok[t] = ok[t] && (e.hessian(x) - ref).norm() == 0.0;
            }
        });
    }
    for (auto &th : threads) {
        th.join();
    }
    for (bool b : ok) {
        CHECK(b);
    }
}
