#include "instanton/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace instanton {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

struct Expr::Node {
    Op op;
    double value = 0.0;  // Const
    int var = -1;        // Var
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double c) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Const;
    n->value = c;
    return n;
}

NodePtr make_var(int i) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Var;
    n->var = i;
    return n;
}

NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

bool is_const(const NodePtr& n, double c) { return n->op == Op::Const && n->value == c; }

// Light constant folding so derivatives stay readable and cheap to evaluate.
NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value + b->value);
    return make_node(Op::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value - b->value);
    if (is_const(a, 0.0)) return make_node(Op::Neg, std::move(b));
    return make_node(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value * b->value);
    return make_node(Op::Mul, std::move(a), std::move(b));
}

NodePtr divide(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return make_const(0.0);
    if (is_const(b, 1.0)) return a;
    return make_node(Op::Div, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a) {
    if (a->op == Op::Const) return make_const(-a->value);
    if (a->op == Op::Neg) return a->a;
    return make_node(Op::Neg, std::move(a));
}

double eval_node(const Expr::Node* n, std::span<const double> x) {
    switch (n->op) {
        case Op::Const: return n->value;
        case Op::Var:
            if (n->var >= static_cast<int>(x.size()))
                throw EvalError("coordinate x" + std::to_string(n->var) + " out of range");
            return x[n->var];
        case Op::Add: return eval_node(n->a.get(), x) + eval_node(n->b.get(), x);
        case Op::Sub: return eval_node(n->a.get(), x) - eval_node(n->b.get(), x);
        case Op::Mul: return eval_node(n->a.get(), x) * eval_node(n->b.get(), x);
        case Op::Div: {
            double denom = eval_node(n->b.get(), x);
            if (denom == 0.0) throw EvalError("division by zero in expression");
            return eval_node(n->a.get(), x) / denom;
        }
        case Op::Pow: return std::pow(eval_node(n->a.get(), x), n->b->value);
        case Op::Neg: return -eval_node(n->a.get(), x);
        case Op::Sin: return std::sin(eval_node(n->a.get(), x));
        case Op::Cos: return std::cos(eval_node(n->a.get(), x));
        case Op::Exp: {
            double v = std::exp(eval_node(n->a.get(), x));
            if (!std::isfinite(v)) throw EvalError("overflow in exp");
            return v;
        }
    }
    throw EvalError("corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, int idx) {
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Var: return make_const(n->var == idx ? 1.0 : 0.0);
        case Op::Add: return add(diff_node(n->a, idx), diff_node(n->b, idx));
        case Op::Sub: return sub(diff_node(n->a, idx), diff_node(n->b, idx));
        case Op::Mul:
            return add(mul(diff_node(n->a, idx), n->b), mul(n->a, diff_node(n->b, idx)));
        case Op::Div:
            return divide(sub(mul(diff_node(n->a, idx), n->b), mul(n->a, diff_node(n->b, idx))),
                          make_node(Op::Pow, n->b, make_const(2.0)));
        case Op::Pow: {
            // Exponent is a constant by construction of the parser.
            double c = n->b->value;
            return mul(mul(make_const(c), make_node(Op::Pow, n->a, make_const(c - 1.0))),
                       diff_node(n->a, idx));
        }
        case Op::Neg: return neg(diff_node(n->a, idx));
        case Op::Sin: return mul(make_node(Op::Cos, n->a), diff_node(n->a, idx));
        case Op::Cos: return neg(mul(make_node(Op::Sin, n->a), diff_node(n->a, idx)));
        case Op::Exp: return mul(make_node(Op::Exp, n->a), diff_node(n->a, idx));
    }
    throw EvalError("corrupt expression node");
}

int max_var(const Expr::Node* n) {
    int m = n->op == Op::Var ? n->var : -1;
    if (n->a) m = std::max(m, max_var(n->a.get()));
    if (n->b) m = std::max(m, max_var(n->b.get()));
    return m;
}

void print_node(const Expr::Node* n, std::string& out) {
    auto paren = [&](const NodePtr& c) {
        out += '(';
        print_node(c.get(), out);
        out += ')';
    };
    switch (n->op) {
        case Op::Const: out += std::to_string(n->value); break;
        case Op::Var: out += "x" + std::to_string(n->var); break;
        case Op::Add: paren(n->a); out += '+'; paren(n->b); break;
        case Op::Sub: paren(n->a); out += '-'; paren(n->b); break;
        case Op::Mul: paren(n->a); out += '*'; paren(n->b); break;
        case Op::Div: paren(n->a); out += '/'; paren(n->b); break;
        case Op::Pow: paren(n->a); out += '^'; paren(n->b); break;
        case Op::Neg: out += '-'; paren(n->a); break;
        case Op::Sin: out += "sin"; paren(n->a); break;
        case Op::Cos: out += "cos"; paren(n->a); break;
        case Op::Exp: out += "exp"; paren(n->a); break;
    }
}

// Recursive-descent parser.
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := unary ('^' unary)*        -- exponent must fold to a constant
//   unary   := '-' unary | primary
//   primary := number | 'pi' | 'x'digits | func '(' expr ')' | '(' expr ')'
class Parser {
  public:
    explicit Parser(const std::string& s) : src_(s) {}

    NodePtr run() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

  private:
    const std::string& src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    NodePtr expr() {
        NodePtr e = term();
        for (;;) {
            if (accept('+'))
                e = add(e, term());
            else if (accept('-'))
                e = sub(e, term());
            else
                return e;
        }
    }

    NodePtr term() {
        NodePtr e = factor();
        for (;;) {
            if (accept('*'))
                e = mul(e, factor());
            else if (accept('/'))
                e = divide(e, factor());
            else
                return e;
        }
    }

    NodePtr factor() {
        // unary minus applies to the whole power: -x0^2 == -(x0^2)
        if (accept('-')) return neg(factor());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) {
            std::size_t at = pos_;
            NodePtr exponent = unary();
            if (exponent->op != Op::Const)
                throw ParseError("exponent must be a numeric constant", at);
            return make_node(Op::Pow, base, exponent);
        }
        return base;
    }

    NodePtr unary() {
        if (accept('-')) return neg(unary());
        return primary();
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        throw ParseError("unexpected character", pos_);
    }

    NodePtr number() {
        std::size_t start = pos_;
        std::size_t consumed = 0;
        double v;
        try {
            v = std::stod(src_.substr(start), &consumed);
        } catch (const std::exception&) {
            throw ParseError("malformed number", start);
        }
        pos_ = start + consumed;
        return make_const(v);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name = src_.substr(start, pos_ - start);
        if (name == "pi") return make_const(std::numbers::pi);
        if (name[0] == 'x' && name.size() > 1 &&
            std::all_of(name.begin() + 1, name.end(),
                        [](char d) { return std::isdigit(static_cast<unsigned char>(d)); }))
            return make_var(std::stoi(name.substr(1)));
        if (name == "sin" || name == "cos" || name == "exp") {
            expect('(');
            NodePtr arg = expr();
            expect(')');
            Op op = name == "sin" ? Op::Sin : name == "cos" ? Op::Cos : Op::Exp;
            return make_node(op, arg);
        }
        throw ParseError("unknown identifier '" + name + "'", start);
    }
};

}  // namespace

Expr Expr::parse(const std::string& source) { return Expr(Parser(source).run()); }

Expr Expr::constant(double c) { return Expr(make_const(c)); }

Expr Expr::variable(int index) { return Expr(make_var(index)); }

double Expr::eval(std::span<const double> x) const {
    if (!root_) throw EvalError("empty expression");
    return eval_node(root_.get(), x);
}

Expr Expr::diff(int index) const { return Expr(diff_node(root_, index)); }

Expr Expr::negated() const { return Expr(neg(root_)); }

int Expr::max_var_index() const { return root_ ? max_var(root_.get()) : -1; }

std::string Expr::to_string() const {
    std::string out;
    if (root_) print_node(root_.get(), out);
    return out;
}

}  // namespace instanton
