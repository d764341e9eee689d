#include "ribgeo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace ribgeo {

namespace {

double checked_pow(double a, double b) { return std::pow(a, b); }

const std::map<std::string, double (*)(double)>& function_catalog() {
    static const std::map<std::string, double (*)(double)> cat = {
        {"sin", std::sin},   {"cos", std::cos},   {"tan", std::tan},
        {"sinh", std::sinh}, {"cosh", std::cosh}, {"tanh", std::tanh},
        {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
        {"abs", std::fabs},
    };
    return cat;
}

}  // namespace

struct Expression::Node {
    enum class Kind { Constant, Variable, Unary, Binary, Call };
    Kind kind = Kind::Constant;
    double constant = 0.0;
    int var_index = 0;
    char op = 0;  // binary operator or '-' for unary
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> a, b;

    double eval(const std::vector<double>& v) const {
        switch (kind) {
            case Kind::Constant: return constant;
            case Kind::Variable: return v[size_t(var_index)];
            case Kind::Unary: return -a->eval(v);
            case Kind::Call: return fn(a->eval(v));
            case Kind::Binary: {
                double x = a->eval(v), y = b->eval(v);
                switch (op) {
                    case '+': return x + y;
                    case '-': return x - y;
                    case '*': return x * y;
                    case '/': return x / y;
                    default: return checked_pow(x, y);
                }
            }
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

// recursive-descent parser over the raw text
class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars)
        : text_(text), vars_(vars) {}

    NodePtr parse() {
        NodePtr e = sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    const std::string& text_;
    const std::vector<std::string>& vars_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("expression error at position " + std::to_string(pos_) + ": " +
                                 what + " in '" + text_ + "'");
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr make_const(double v) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Expression::Node::Kind::Constant;
        n->constant = v;
        return n;
    }

    NodePtr make_binary(char op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Expression::Node::Kind::Binary;
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr sum() {
        NodePtr e = product();
        for (;;) {
            if (eat('+')) e = make_binary('+', e, product());
            else if (eat('-')) e = make_binary('-', e, product());
            else return e;
        }
    }

    NodePtr product() {
        NodePtr e = unary();
        for (;;) {
            if (eat('*')) e = make_binary('*', e, unary());
            else if (eat('/')) e = make_binary('/', e, unary());
            else return e;
        }
    }

    NodePtr unary() {
        if (eat('-')) {
            auto n = std::make_shared<Expression::Node>();
            n->kind = Expression::Node::Kind::Unary;
            n->a = unary();
            return n;
        }
        (void)eat('+');
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (eat('^')) return make_binary('^', base, unary());  // right associative
        return base;
    }

    NodePtr atom() {
        skip_space();
        if (pos_ >= text_.size()) fail("expected a value");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
        fail("unexpected character");
    }

    NodePtr number() {
        const char* start = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(start, &end);
        if (end == start) fail("bad number");
        pos_ += size_t(end - start);
        return make_const(v);
    }

    NodePtr name() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string id = text_.substr(start, pos_ - start);
        if (id == "pi") return make_const(M_PI);
        for (size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == id) {
                auto n = std::make_shared<Expression::Node>();
                n->kind = Expression::Node::Kind::Variable;
                n->var_index = int(i);
                return n;
            }
        auto fn = function_catalog().find(id);
        if (fn != function_catalog().end()) {
            if (!eat('(')) fail("expected '(' after function name");
            auto n = std::make_shared<Expression::Node>();
            n->kind = Expression::Node::Kind::Call;
            n->fn = fn->second;
            n->a = sum();
            if (!eat(')')) fail("expected ')'");
            return n;
        }
        pos_ = start;
        fail("unknown name '" + id + "'");
    }
};

}  // namespace

Expression::Expression(const std::string& text, std::vector<std::string> variables)
    : vars_(std::move(variables)) {
    root_ = Parser(text, vars_).parse();
}

double Expression::operator()(const std::vector<double>& values) const {
    if (values.size() != vars_.size())
        throw std::runtime_error("expression: expected " + std::to_string(vars_.size()) +
                                 " values, got " + std::to_string(values.size()));
    return root_->eval(values);
}

std::function<double(double)> expr_function(const std::string& text, const std::string& var) {
    Expression e(text, {var});
    return [e](double s) { return e(s); };
}

}  // namespace ribgeo
