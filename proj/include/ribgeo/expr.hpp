#pragma once

// Small arithmetic expression evaluator for scenario configs: the usual
// operators (+ - * / ^, unary minus), parentheses, decimal literals, the
// constant pi, named variables, and a fixed function catalog
// (sin cos tan sinh cosh tanh exp log sqrt abs).

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ribgeo {

class Expression {
public:
    /// Parse `text` over the given variable names. Throws std::runtime_error
    /// with a position-annotated message on syntax errors or unknown names.
    Expression(const std::string& text, std::vector<std::string> variables);

    /// Evaluate with one value per declared variable, in declaration order.
    double operator()(const std::vector<double>& values) const;

    /// Convenience for single-variable expressions.
    double operator()(double value) const { return (*this)(std::vector<double>{value}); }

    const std::vector<std::string>& variables() const { return vars_; }

    struct Node;  // parse-tree node, public for the parser implementation

private:
    std::shared_ptr<const Node> root_;
    std::vector<std::string> vars_;
};

/// Wrap a single-variable expression as a plain function object.
std::function<double(double)> expr_function(const std::string& text, const std::string& var);

}  // namespace ribgeo
