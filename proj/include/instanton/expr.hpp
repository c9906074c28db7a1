#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace instanton {

// Parse/evaluation error with the offending position in the source text.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scalar expression in coordinates x0..x(n-1) built from +,-,*,/,^ (constant
// exponent), sin, cos, exp, numeric literals and pi.  Immutable; nodes are
// shared between trees, so copies are cheap.
class Expr {
  public:
    Expr() = default;

    static Expr parse(const std::string& source);
    static Expr constant(double c);
    static Expr variable(int index);

    bool empty() const { return !root_; }

    double eval(std::span<const double> x) const;

    // Exact symbolic partial derivative with respect to x{index}.
    Expr diff(int index) const;

    Expr negated() const;

    // Largest coordinate index referenced, or -1 for constant expressions.
    int max_var_index() const;

    std::string to_string() const;

    struct Node;

  private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

}  // namespace instanton
