#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equistab/dual.hpp"
#include "equistab/linalg.hpp"

namespace equistab {

enum class ExprOp : std::uint8_t { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt };

struct ExprNode {
    ExprOp op = ExprOp::Constant;
    double value = 0.0; // Constant
    int index = 0;      // Variable: 1-based index; Pow: integer exponent
    std::shared_ptr<const ExprNode> lhs;
    std::shared_ptr<const ExprNode> rhs;
};

// Division and sqrt guard: denominators with |x| <= this raise DomainError.
inline constexpr double domain_guard = 1e-300;

// Immutable scalar expression over variables x1..xN.
//
// Grammar (whitespace insignificant, left-associative):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' integer)?
//   base   := number | ident '(' expr ')' | 'x' integer | '(' expr ')' | '-' factor
// with ident in {sin, cos, exp, sqrt}. Unary minus takes a whole factor, so
// "-x1^2" is -(x1^2).
class Expression {
public:
    Expression();

    static Expression parse(std::string_view text, int n_vars);
    static Expression constant(double c, int n_vars);
    static Expression variable(int index, int n_vars);

    int n_vars() const { return n_vars_; }
    const ExprNode &root() const { return *root_; }
    std::shared_ptr<const ExprNode> root_ptr() const { return root_; }

    // Canonical text form; parse(to_string()) reproduces the same tree.
    std::string to_string() const;
    bool structurally_equal(const Expression &other) const;

    double eval(std::span<const double> x) const;
    double eval(const Vec &x) const;
    Vec gradient(const Vec &x) const;
    Mat hessian(const Vec &x) const;

    friend Expression operator+(const Expression &a, const Expression &b);
    friend Expression operator-(const Expression &a, const Expression &b);
    friend Expression operator*(const Expression &a, const Expression &b);
    friend Expression operator/(const Expression &a, const Expression &b);
    friend Expression operator-(const Expression &a);
    friend Expression operator*(double c, const Expression &a);
    friend Expression operator+(const Expression &a, double c);
    friend Expression pow(const Expression &a, int exponent);
    friend Expression sin(const Expression &a);
    friend Expression cos(const Expression &a);
    friend Expression exp(const Expression &a);
    friend Expression sqrt(const Expression &a);

    struct Instr {
        ExprOp op;
        int a;
        int b;
        double value;
        int index;
    };

private:
    Expression(std::shared_ptr<const ExprNode> root, int n_vars);

    template <typename T>
    T run(std::span<const T> x) const;

    std::shared_ptr<const ExprNode> root_;
    int n_vars_ = 0;
    std::shared_ptr<const std::vector<Instr>> tape_;
};

} // namespace equistab
