#pragma once

// Boolean state predicates used as reachability targets, e.g.
//   flag_r1
//   flag_c2 & flag_r1
//   s_c2 = 10 | !flag_s1

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prtspace {

class ExprError : public std::invalid_argument {
public:
    ExprError(const std::string& message, size_t offset) : std::invalid_argument(message), offset_(offset) {}
    /// Byte offset into the parsed text.
    size_t offset() const { return offset_; }

private:
    size_t offset_;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

class Expr {
public:
    enum class Kind { Const, Var, Compare, Not, And, Or };

    static Expr constant(bool value);
    static Expr variable(std::string name);
    static Expr compare(std::string name, CompareOp op, std::int64_t value);
    static Expr negate(Expr e);
    static Expr conj(Expr a, Expr b);
    static Expr disj(Expr a, Expr b);

    Kind kind() const;
    /// Names in first-occurrence order, without duplicates.
    std::vector<std::string> variables() const;
    std::string to_string() const;

    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;

    friend class BoundExpr;
};

/// Parses the target grammar:
///   or   := and ('|' and)*
///   and  := unary ('&' unary)*
///   unary:= '!' unary | '(' or ')' | 'true' | 'false' | IDENT [cmp INT]
///   cmp  := '=' | '!=' | '<' | '<=' | '>' | '>='
Expr parse_expr(std::string_view text);

/// An expression resolved against a fixed variable layout.
class BoundExpr {
public:
    /// Throws ExprError (offset 0) naming the first unknown variable.
    BoundExpr(const Expr& expr, std::span<const std::string> variable_names);

    bool evaluate(std::span<const std::int32_t> valuation) const;

private:
    struct Op {
        Expr::Kind kind;
        CompareOp cmp = CompareOp::Eq;
        std::int32_t slot = 0;
        std::int64_t value = 0;
    };
    // Postfix program.
    std::vector<Op> program_;
};

}  // namespace prtspace
