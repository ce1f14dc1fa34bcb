#include "equistab/expr.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <type_traits>
#include <unordered_map>

#include "equistab/error.hpp"

namespace equistab {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_node(ExprOp op, NodePtr lhs = nullptr, NodePtr rhs = nullptr)
{
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

NodePtr make_constant(double c)
{
    if (!std::isfinite(c)) {
        fail(ErrorCode::NonFiniteInput, "non-finite constant in expression");
    }
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Constant;
    n->value = std::abs(c);
    // Negative constants are stored as Neg(Constant) so that printing and
    // re-parsing gives the same tree.
    if (std::signbit(c) && c != 0.0) {
        return make_node(ExprOp::Neg, n);
    }
    return n;
}

NodePtr make_variable(int index)
{
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Variable;
    n->index = index;
    return n;
}

NodePtr make_pow(NodePtr base, int exponent)
{
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Pow;
    n->index = exponent;
    n->lhs = std::move(base);
    return n;
}

class Parser {
public:
    Parser(std::string_view text, int n_vars) : text_(text), n_vars_(n_vars) {}

    NodePtr parse()
    {
        skip_space();
        if (pos_ >= text_.size()) {
            error("expression");
        }
        NodePtr e = parse_expr();
        skip_space();
        if (pos_ != text_.size()) {
            error("operator or end of input");
        }
        return e;
    }

private:
    [[noreturn]] void error(const std::string &expected) const
    {
        throw ParseError(pos_, expected, std::string(text_));
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool peek(char c)
    {
        skip_space();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    NodePtr parse_expr()
    {
        NodePtr lhs = parse_term();
        while (true) {
            if (peek('+')) {
                ++pos_;
                lhs = make_node(ExprOp::Add, lhs, parse_term());
            } else if (peek('-')) {
                ++pos_;
                lhs = make_node(ExprOp::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term()
    {
        NodePtr lhs = parse_factor();
        while (true) {
            if (peek('*')) {
                ++pos_;
                lhs = make_node(ExprOp::Mul, lhs, parse_factor());
            } else if (peek('/')) {
                ++pos_;
                lhs = make_node(ExprOp::Div, lhs, parse_factor());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_factor()
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '-') {
            ++pos_;
            return make_node(ExprOp::Neg, parse_factor());
        }
        NodePtr base = parse_base();
        if (!peek('^')) {
            return base;
        }
        ++pos_;
        skip_space();
        bool negative = false;
        if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
            negative = text_[pos_] == '-';
            ++pos_;
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) {
            error("integer exponent");
        }
        int k = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, k);
        if (ec != std::errc() || k > 4096) {
            pos_ = start;
            error("integer exponent below 4096");
        }
        return make_pow(base, negative ? -k : k);
    }

    NodePtr parse_base()
    {
        skip_space();
        if (pos_ >= text_.size()) {
            error("operand");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_expr();
            if (!peek(')')) {
                error("')'");
            }
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            return parse_identifier();
        }
        error("operand");
    }

    NodePtr parse_number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) {
            pos_ = start;
            error("number");
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            const std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
                ++pos_;
            }
            if (digits() == 0) {
                pos_ = save;
                error("exponent digits");
            }
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value)) {
            pos_ = start;
            error("finite number");
        }
        auto node = std::make_shared<ExprNode>();
        node->op = ExprOp::Constant;
        node->value = value;
        return node;
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        const std::string_view word = text_.substr(start, pos_ - start);
        if (word == "x") {
            const std::size_t dstart = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
            if (dstart == pos_) {
                error("variable index");
            }
            int index = 0;
            auto [ptr, ec] = std::from_chars(text_.data() + dstart, text_.data() + pos_, index);
            if (ec != std::errc() || index < 1 || index > n_vars_) {
                throw Error(ErrorCode::VariableOutOfRange,
                            "variable x" + std::string(text_.substr(dstart, pos_ - dstart)) + " outside x1..x" +
                                std::to_string(n_vars_) + " at position " + std::to_string(start));
            }
            return make_variable(index);
        }
        ExprOp op;
        if (word == "sin") {
            op = ExprOp::Sin;
        } else if (word == "cos") {
            op = ExprOp::Cos;
        } else if (word == "exp") {
            op = ExprOp::Exp;
        } else if (word == "sqrt") {
            op = ExprOp::Sqrt;
        } else {
            throw Error(ErrorCode::UnknownFunction,
                        "unknown function '" + std::string(word) + "' at position " + std::to_string(start));
        }
        if (!peek('(')) {
            error("'(' after " + std::string(word));
        }
        ++pos_;
        NodePtr arg = parse_expr();
        if (!peek(')')) {
            error("')'");
        }
        ++pos_;
        return make_node(op, arg);
    }

    std::string_view text_;
    int n_vars_;
    std::size_t pos_ = 0;
};

int precedence(const ExprNode &n)
{
    switch (n.op) {
    case ExprOp::Add:
    case ExprOp::Sub: return 1;
    case ExprOp::Mul:
    case ExprOp::Div: return 2;
    case ExprOp::Neg: return 3;
    case ExprOp::Pow: return 4;
    default: return 5;
    }
}

std::string format_number(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void print(const ExprNode &n, std::string &out);

void print_child(const ExprNode &child, int min_prec, std::string &out)
{
    if (precedence(child) < min_prec) {
        out += '(';
        print(child, out);
        out += ')';
    } else {
        print(child, out);
    }
}

void print(const ExprNode &n, std::string &out)
{
    switch (n.op) {
    case ExprOp::Constant: out += format_number(n.value); return;
    case ExprOp::Variable:
        out += 'x';
        out += std::to_string(n.index);
        return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div: {
        const int p = precedence(n);
        print_child(*n.lhs, p, out);
        out += n.op == ExprOp::Add ? "+" : n.op == ExprOp::Sub ? "-" : n.op == ExprOp::Mul ? "*" : "/";
        // Right operands at the same level need brackets to keep left associativity.
        print_child(*n.rhs, p + 1, out);
        return;
    }
    case ExprOp::Neg:
        out += '-';
        print_child(*n.lhs, 3, out);
        return;
    case ExprOp::Pow:
        print_child(*n.lhs, 5, out);
        out += '^';
        out += std::to_string(n.index);
        return;
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Exp:
    case ExprOp::Sqrt:
        out += n.op == ExprOp::Sin ? "sin(" : n.op == ExprOp::Cos ? "cos(" : n.op == ExprOp::Exp ? "exp(" : "sqrt(";
        print(*n.lhs, out);
        out += ')';
        return;
    }
}

bool equal_nodes(const ExprNode &a, const ExprNode &b)
{
    if (a.op != b.op) {
        return false;
    }
    switch (a.op) {
    case ExprOp::Constant: return a.value == b.value;
    case ExprOp::Variable: return a.index == b.index;
    case ExprOp::Pow: return a.index == b.index && equal_nodes(*a.lhs, *b.lhs);
    case ExprOp::Neg:
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Exp:
    case ExprOp::Sqrt: return equal_nodes(*a.lhs, *b.lhs);
    default: return equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
    }
}

using Tape = std::vector<Expression::Instr>;

int emit(const ExprNode *n, Tape &tape, std::unordered_map<const ExprNode *, int> &seen)
{
    if (auto it = seen.find(n); it != seen.end()) {
        return it->second;
    }
    Expression::Instr ins{n->op, -1, -1, n->value, n->index};
    if (n->lhs) {
        ins.a = emit(n->lhs.get(), tape, seen);
    }
    if (n->rhs) {
        ins.b = emit(n->rhs.get(), tape, seen);
    }
    tape.push_back(ins);
    const int slot = static_cast<int>(tape.size()) - 1;
    seen.emplace(n, slot);
    return slot;
}

std::shared_ptr<const Tape> compile(const ExprNode &root)
{
    auto tape = std::make_shared<Tape>();
    std::unordered_map<const ExprNode *, int> seen;
    emit(&root, *tape, seen);
    return tape;
}

template <typename T>
T lift(double c)
{
    if constexpr (std::is_same_v<T, double>) {
        return c;
    } else {
        return T(c);
    }
}

template <typename T>
T guarded_div(const T &a, const T &b)
{
    if (std::abs(primal(b)) <= domain_guard) {
        fail(ErrorCode::DomainError, "division by zero");
    }
    return a / b;
}

template <typename T>
T int_pow(const T &x, int k)
{
    if (k == 0) {
        return lift<T>(1.0);
    }
    const bool invert = k < 0;
    unsigned e = static_cast<unsigned>(invert ? -k : k);
    T result = lift<T>(1.0);
    T base = x;
    bool first = true;
    while (e > 0) {
        if (e & 1U) {
            result = first ? base : result * base;
            first = false;
        }
        e >>= 1U;
        if (e > 0) {
            base = base * base;
        }
    }
    if (invert) {
        return guarded_div(lift<T>(1.0), result);
    }
    return result;
}

} // namespace

Expression::Expression() : Expression(make_constant(0.0), 0) {}

Expression::Expression(std::shared_ptr<const ExprNode> root, int n_vars)
    : root_(std::move(root)), n_vars_(n_vars), tape_(compile(*root_))
{
}

Expression Expression::parse(std::string_view text, int n_vars)
{
    Parser p(text, n_vars);
    return Expression(p.parse(), n_vars);
}

Expression Expression::constant(double c, int n_vars)
{
    return Expression(make_constant(c), n_vars);
}

Expression Expression::variable(int index, int n_vars)
{
    if (index < 1 || index > n_vars) {
        fail(ErrorCode::VariableOutOfRange, "variable x" + std::to_string(index));
    }
    return Expression(make_variable(index), n_vars);
}

std::string Expression::to_string() const
{
    std::string out;
    print(*root_, out);
    return out;
}

bool Expression::structurally_equal(const Expression &other) const
{
    return n_vars_ == other.n_vars_ && equal_nodes(*root_, *other.root_);
}

template <typename T>
T Expression::run(std::span<const T> x) const
{
    if (static_cast<int>(x.size()) != n_vars_) {
        fail(ErrorCode::DimensionMismatch, "expression over " + std::to_string(n_vars_) + " variables evaluated at " +
                                               std::to_string(x.size()) + " values");
    }
    thread_local std::vector<T> slots;
    const Tape &tape = *tape_;
    slots.resize(tape.size());
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    for (std::size_t i = 0; i < tape.size(); ++i) {
        const Instr &ins = tape[i];
        switch (ins.op) {
        case ExprOp::Constant: slots[i] = lift<T>(ins.value); break;
        case ExprOp::Variable: slots[i] = x[static_cast<std::size_t>(ins.index - 1)]; break;
        case ExprOp::Add: slots[i] = slots[ins.a] + slots[ins.b]; break;
        case ExprOp::Sub: slots[i] = slots[ins.a] - slots[ins.b]; break;
        case ExprOp::Mul: slots[i] = slots[ins.a] * slots[ins.b]; break;
        case ExprOp::Div: slots[i] = guarded_div(slots[ins.a], slots[ins.b]); break;
        case ExprOp::Pow: slots[i] = int_pow(slots[ins.a], ins.index); break;
        case ExprOp::Neg: slots[i] = -slots[ins.a]; break;
        case ExprOp::Sin: slots[i] = sin(slots[ins.a]); break;
        case ExprOp::Cos: slots[i] = cos(slots[ins.a]); break;
        case ExprOp::Exp: slots[i] = exp(slots[ins.a]); break;
        case ExprOp::Sqrt: {
            const double p = primal(slots[ins.a]);
            if (p < 0.0) {
                fail(ErrorCode::DomainError, "sqrt of negative value " + std::to_string(p));
            }
            if constexpr (!std::is_same_v<T, double>) {
                if (p <= domain_guard) {
                    fail(ErrorCode::DomainError, "derivative of sqrt at zero");
                }
            }
            slots[i] = sqrt(slots[ins.a]);
            break;
        }
        }
    }
    return slots.back();
}

double Expression::eval(std::span<const double> x) const
{
    return run<double>(x);
}

double Expression::eval(const Vec &x) const
{
    return run<double>(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Vec Expression::gradient(const Vec &x) const
{
    using D = Dual<double>;
    const auto n = static_cast<std::size_t>(n_vars_);
    if (static_cast<std::size_t>(x.size()) != n) {
        fail(ErrorCode::DimensionMismatch, "gradient point has wrong length");
    }
    std::vector<D> seed(n);
    for (std::size_t i = 0; i < n; ++i) {
        seed[i] = D(x(static_cast<Eigen::Index>(i)), 0.0);
    }
    Vec g(n_vars_);
    for (std::size_t i = 0; i < n; ++i) {
        seed[i].d = 1.0;
        g(static_cast<Eigen::Index>(i)) = run<D>(seed).d;
        seed[i].d = 0.0;
    }
    return g;
}

Mat Expression::hessian(const Vec &x) const
{
    using D1 = Dual<double>;
    using D2 = Dual<D1>;
    const auto n = static_cast<std::size_t>(n_vars_);
    if (static_cast<std::size_t>(x.size()) != n) {
        fail(ErrorCode::DimensionMismatch, "hessian point has wrong length");
    }
    std::vector<D2> seed(n);
    for (std::size_t k = 0; k < n; ++k) {
        seed[k] = D2(D1(x(static_cast<Eigen::Index>(k)), 0.0), D1(0.0, 0.0));
    }
    Mat h(n_vars_, n_vars_);
    for (std::size_t i = 0; i < n; ++i) {
        seed[i].d.v = 1.0;
        for (std::size_t j = i; j < n; ++j) {
            seed[j].v.d = 1.0;
            const double hij = run<D2>(seed).d.d;
            seed[j].v.d = 0.0;
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hij;
            h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = hij;
        }
        seed[i].d.v = 0.0;
    }
    return h;
}

namespace {

void check_arity(const Expression &a, const Expression &b)
{
    if (a.n_vars() != b.n_vars()) {
        fail(ErrorCode::DimensionMismatch, "combining expressions over " + std::to_string(a.n_vars()) + " and " +
                                               std::to_string(b.n_vars()) + " variables");
    }
}

} // namespace

Expression operator+(const Expression &a, const Expression &b)
{
    check_arity(a, b);
    return Expression(make_node(ExprOp::Add, a.root_, b.root_), a.n_vars_);
}

Expression operator-(const Expression &a, const Expression &b)
{
    check_arity(a, b);
    return Expression(make_node(ExprOp::Sub, a.root_, b.root_), a.n_vars_);
}

Expression operator*(const Expression &a, const Expression &b)
{
    check_arity(a, b);
    return Expression(make_node(ExprOp::Mul, a.root_, b.root_), a.n_vars_);
}

Expression operator/(const Expression &a, const Expression &b)
{
    check_arity(a, b);
    return Expression(make_node(ExprOp::Div, a.root_, b.root_), a.n_vars_);
}

Expression operator-(const Expression &a)
{
    return Expression(make_node(ExprOp::Neg, a.root_), a.n_vars_);
}

Expression operator*(double c, const Expression &a)
{
    return Expression::constant(c, a.n_vars_) * a;
}

Expression operator+(const Expression &a, double c)
{
    return a + Expression::constant(c, a.n_vars_);
}

Expression pow(const Expression &a, int exponent)
{
    return Expression(make_pow(a.root_, exponent), a.n_vars_);
}

Expression sin(const Expression &a)
{
    return Expression(make_node(ExprOp::Sin, a.root_), a.n_vars_);
}

Expression cos(const Expression &a)
{
    return Expression(make_node(ExprOp::Cos, a.root_), a.n_vars_);
}

Expression exp(const Expression &a)
{
    return Expression(make_node(ExprOp::Exp, a.root_), a.n_vars_);
}

Expression sqrt(const Expression &a)
{
    return Expression(make_node(ExprOp::Sqrt, a.root_), a.n_vars_);
}

} // namespace equistab
