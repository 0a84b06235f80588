#include "prtspace/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace prtspace {

struct Expr::Node {
    Kind kind;
    bool constant = false;
    std::string name;
    CompareOp op = CompareOp::Eq;
    std::int64_t value = 0;
    std::shared_ptr<const Node> lhs, rhs;
};

Expr Expr::constant(bool value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->constant = value;
    return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->name = std::move(name);
    return Expr(std::move(n));
}

Expr Expr::compare(std::string name, CompareOp op, std::int64_t value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Compare;
    n->name = std::move(name);
    n->op = op;
    n->value = value;
    return Expr(std::move(n));
}

Expr Expr::negate(Expr e) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Not;
    n->lhs = std::move(e.node_);
    return Expr(std::move(n));
}

Expr Expr::conj(Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::And;
    n->lhs = std::move(a.node_);
    n->rhs = std::move(b.node_);
    return Expr(std::move(n));
}

Expr Expr::disj(Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Or;
    n->lhs = std::move(a.node_);
    n->rhs = std::move(b.node_);
    return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }

namespace {


const char* op_text(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "=";
}

// Precedence: Or 1, And 2, unary 3.
int precedence(Expr::Kind k) {
    switch (k) {
        case Expr::Kind::Or: return 1;
        case Expr::Kind::And: return 2;
        default: return 3;
    }
}

}  // namespace

std::vector<std::string> Expr::variables() const {
    std::vector<std::string> out;
    std::vector<const Node*> stack{node_.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->kind == Kind::Var || n->kind == Kind::Compare) {
            if (std::find(out.begin(), out.end(), n->name) == out.end()) out.push_back(n->name);
        }
        if (n->rhs) stack.push_back(n->rhs.get());
        if (n->lhs) stack.push_back(n->lhs.get());
    }
    return out;
}

std::string Expr::to_string() const {
    struct Printer {
        static std::string print(const Node& n) {
            auto child = [&](const Node& c, int min_prec) {
                std::string s = print(c);
                return precedence(c.kind) < min_prec ? "(" + s + ")" : s;
            };
            switch (n.kind) {
                case Kind::Const: return n.constant ? "true" : "false";
                case Kind::Var: return n.name;
                case Kind::Compare: return n.name + " " + op_text(n.op) + " " + std::to_string(n.value);
                case Kind::Not: return "!" + child(*n.lhs, 3);
                case Kind::And: return child(*n.lhs, 2) + " & " + child(*n.rhs, 3);
                case Kind::Or: return child(*n.lhs, 1) + " | " + child(*n.rhs, 2);
            }
            return {};
        }
    };
    return Printer::print(*node_);
}

bool operator==(const Expr& a, const Expr& b) {
    struct Eq {
        static bool eq(const Expr::Node* x, const Expr::Node* y) {
            if (x == y) return true;
            if (!x || !y) return false;
            return x->kind == y->kind && x->constant == y->constant && x->name == y->name && x->op == y->op &&
                   x->value == y->value && eq(x->lhs.get(), y->lhs.get()) && eq(x->rhs.get(), y->rhs.get());
        }
    };
    return Eq::eq(a.node_.get(), b.node_.get());
}

namespace {

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    Expr parse() {
        skip_space();
        if (pos_ >= text_.size()) throw ExprError("expected expression", pos_);
        Expr e = parse_or();
        skip_space();
        if (pos_ < text_.size()) throw ExprError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        return e;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view token) {
        skip_space();
        if (text_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (true) {
            skip_space();
            if (accept("||") || accept("|")) {
                lhs = Expr::disj(std::move(lhs), parse_and());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_and() {
        Expr lhs = parse_unary();
        while (true) {
            skip_space();
            if (accept("&&") || accept("&")) {
                lhs = Expr::conj(std::move(lhs), parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (++depth_ > kMaxDepth) throw ExprError("expression nested too deeply", pos_);
        struct Leave {
            int& d;
            ~Leave() { --d; }
        } leave{depth_};
        skip_space();
        if (pos_ >= text_.size()) throw ExprError("expected operand", pos_);
        char c = text_[pos_];
        if (c == '!' && !(pos_ + 1 < text_.size() && text_[pos_ + 1] == '=')) {
            ++pos_;
            return Expr::negate(parse_unary());
        }
        if (c == '(') {
            ++pos_;
            Expr inner = parse_or();
            if (!accept(")")) throw ExprError("expected ')'", pos_);
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string name(text_.substr(start, pos_ - start));
            if (name == "true") return Expr::constant(true);
            if (name == "false") return Expr::constant(false);
            skip_space();
            CompareOp op;
            if (accept("!=")) op = CompareOp::Ne;
            else if (accept("<=")) op = CompareOp::Le;
            else if (accept(">=")) op = CompareOp::Ge;
            else if (accept("==") || accept("=")) op = CompareOp::Eq;
            else if (accept("<")) op = CompareOp::Lt;
            else if (accept(">")) op = CompareOp::Gt;
            else return Expr::variable(std::move(name));
            return Expr::compare(std::move(name), op, parse_int());
        }
        throw ExprError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    std::int64_t parse_int() {
        skip_space();
        size_t start = pos_;
        if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_ || pos_ == start)
            throw ExprError("expected integer", start);
        return value;
    }

    static constexpr int kMaxDepth = 256;
    std::string_view text_;
    size_t pos_ = 0;
    int depth_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text) { return ExprParser(text).parse(); }

BoundExpr::BoundExpr(const Expr& expr, std::span<const std::string> variable_names) {
    struct Compiler {
        std::span<const std::string> names;
        std::vector<Op>& out;
        void emit(const Expr::Node& n) {
            switch (n.kind) {
                case Expr::Kind::Const: out.push_back({n.kind, CompareOp::Eq, 0, n.constant ? 1 : 0}); return;
                case Expr::Kind::Var:
                case Expr::Kind::Compare: {
                    auto it = std::find(names.begin(), names.end(), n.name);
                    if (it == names.end()) throw ExprError("unknown variable '" + n.name + "'", 0);
                    out.push_back({n.kind, n.op, static_cast<std::int32_t>(it - names.begin()), n.value});
                    return;
                }
                case Expr::Kind::Not: emit(*n.lhs); out.push_back({n.kind}); return;
                case Expr::Kind::And:
                case Expr::Kind::Or:
                    emit(*n.lhs);
                    emit(*n.rhs);
                    out.push_back({n.kind});
                    return;
            }
        }
    };
    Compiler{variable_names, program_}.emit(*expr.node_);
}

bool BoundExpr::evaluate(std::span<const std::int32_t> valuation) const {
    bool stack[64];
    std::vector<bool> overflow;
    size_t top = 0;
    auto push = [&](bool v) {
        if (top < 64) stack[top] = v;
        else overflow.push_back(v);
        ++top;
    };
    auto pop = [&]() -> bool {
        --top;
        if (top < 64) return stack[top];
        bool v = overflow.back();
        overflow.pop_back();
        return v;
    };
    for (const Op& op : program_) {
        switch (op.kind) {
            case Expr::Kind::Const: push(op.value != 0); break;
            case Expr::Kind::Var: push(valuation[static_cast<size_t>(op.slot)] != 0); break;
            case Expr::Kind::Compare: {
                std::int64_t v = valuation[static_cast<size_t>(op.slot)];
                bool r = false;
                switch (op.cmp) {
                    case CompareOp::Eq: r = v == op.value; break;
                    case CompareOp::Ne: r = v != op.value; break;
                    case CompareOp::Lt: r = v < op.value; break;
                    case CompareOp::Le: r = v <= op.value; break;
                    case CompareOp::Gt: r = v > op.value; break;
                    case CompareOp::Ge: r = v >= op.value; break;
                }
                push(r);
                break;
            }
            case Expr::Kind::Not: push(!pop()); break;
            case Expr::Kind::And: {
                bool b = pop(), a = pop();
                push(a && b);
                break;
            }
            case Expr::Kind::Or: {
                bool b = pop(), a = pop();
                push(a || b);
                break;
            }
        }
    }
    return pop();
}

}  // namespace prtspace
