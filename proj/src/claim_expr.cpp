#include "risklat/claim_expr.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace risklat {

struct ClaimExpr::Node {
    enum class Kind { Constant, Symbol, Add, Sub, Mul, Div, Neg, Min, Max, Exp, Abs };
    Kind kind;
    double value = 0.0;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;

    double eval(double b_t) const {
        switch (kind) {
        case Kind::Constant: return value;
        case Kind::Symbol: return b_t;
        case Kind::Add: return left->eval(b_t) + right->eval(b_t);
        case Kind::Sub: return left->eval(b_t) - right->eval(b_t);
        case Kind::Mul: return left->eval(b_t) * right->eval(b_t);
        case Kind::Div: return left->eval(b_t) / right->eval(b_t);
        case Kind::Neg: return -left->eval(b_t);
        case Kind::Min: return std::min(left->eval(b_t), right->eval(b_t));
        case Kind::Max: return std::max(left->eval(b_t), right->eval(b_t));
        case Kind::Exp: return std::exp(left->eval(b_t));
        case Kind::Abs: return std::abs(left->eval(b_t));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const ClaimExpr::Node>;
using Kind = ClaimExpr::Node::Kind;

NodePtr make(Kind kind, NodePtr left = nullptr, NodePtr right = nullptr, double value = 0.0) {
    auto n = std::make_shared<ClaimExpr::Node>();
    n->kind = kind;
    n->value = value;
    n->left = std::move(left);
    n->right = std::move(right);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    NodePtr run() {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != text_.size()) {
            throw ConfigError("claim expression: trailing input at '" + text_.substr(pos_) + "'");
        }
        return e;
    }

private:
    NodePtr expression() {
        NodePtr e = term();
        for (;;) {
            skip_ws();
            if (consume('+')) {
                e = make(Kind::Add, e, term());
            } else if (consume('-')) {
                e = make(Kind::Sub, e, term());
            } else {
                return e;
            }
        }
    }

    NodePtr term() {
        NodePtr e = factor();
        for (;;) {
            skip_ws();
            if (consume('*')) {
                e = make(Kind::Mul, e, factor());
            } else if (consume('/')) {
                e = make(Kind::Div, e, factor());
            } else {
                return e;
            }
        }
    }

    NodePtr factor() {
        skip_ws();
        if (consume('-')) return make(Kind::Neg, factor());
        if (consume('+')) return factor();
        return primary();
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ConfigError("claim expression: unexpected end of input");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (consume('(')) {
            NodePtr e = expression();
            expect(')');
            return e;
        }
        const std::string name = identifier();
        if (name == "B_T") return make(Kind::Symbol);
        if (name == "exp" || name == "abs") {
            expect('(');
            NodePtr a = expression();
            expect(')');
            return make(name == "exp" ? Kind::Exp : Kind::Abs, a);
        }
        if (name == "min" || name == "max") {
            expect('(');
            NodePtr a = expression();
            expect(',');
            NodePtr b = expression();
            expect(')');
            return make(name == "min" ? Kind::Min : Kind::Max, a, b);
        }
        throw ConfigError("claim expression: unknown symbol '" + name + "'");
    }

    NodePtr number() {
        std::size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(text_.substr(pos_), &consumed);
        } catch (const std::exception&) {
            throw ConfigError("claim expression: bad number near '" + text_.substr(pos_) + "'");
        }
        pos_ += consumed;
        return make(Kind::Constant, nullptr, nullptr, v);
    }

    std::string identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        if (pos_ == start) {
            throw ConfigError("claim expression: unexpected character '" +
                              std::string(1, text_[pos_]) + "'");
        }
        return text_.substr(start, pos_ - start);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!consume(c)) {
            throw ConfigError(std::string("claim expression: expected '") + c + "'");
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

} // namespace

ClaimExpr ClaimExpr::parse(const std::string& text) {
    ClaimExpr expr;
    expr.root_ = Parser(text).run();
    expr.text_ = text;
    return expr;
}

double ClaimExpr::evaluate(double b_t) const { return root_->eval(b_t); }

TerminalClaim ClaimExpr::build(const LatticeModel& model) const {
    const int n = model.steps();
    TerminalClaim claim{std::vector<double>(model.states_at(n))};
    for (std::size_t s = 0; s < claim.values.size(); ++s) {
        claim.values[s] = root_->eval(model.brownian(n, s));
    }
    return claim;
}

} // namespace risklat
