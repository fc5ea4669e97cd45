#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daestab/errors.hpp"

namespace daestab {

// Values an expression is evaluated against. Lengths must match the
// dimensions the expression was parsed with.
struct EvalContext {
    std::span<const double> x;
    std::span<const double> u;
    double t = 0.0;
};

// Immutable expression tree over x1..xn, u1..um, t, arithmetic operators
// and the functions sin, cos, exp, ln, sqrt, abs. Trees are value types and
// safe to share across threads.
class Expr {
public:
    enum class Kind : std::uint8_t { Literal, VarX, VarU, VarT, Neg, Add, Sub, Mul, Div, Pow, Call };
    enum class Func : std::uint8_t { Sin, Cos, Exp, Ln, Sqrt, Abs };

    Expr() : kind_(Kind::Literal), value_(0.0) {}

    static Expr literal(double v) {
        Expr e;
        e.kind_ = Kind::Literal;
        e.value_ = v;
        return e;
    }
    static Expr var_x(int index) {
        Expr e;
        e.kind_ = Kind::VarX;
        e.index_ = index;
        return e;
    }
    static Expr var_u(int index) {
        Expr e;
        e.kind_ = Kind::VarU;
        e.index_ = index;
        return e;
    }
    static Expr var_t() {
        Expr e;
        e.kind_ = Kind::VarT;
        return e;
    }
    static Expr neg(Expr a) {
        Expr e;
        e.kind_ = Kind::Neg;
        e.kids_.push_back(std::move(a));
        return e;
    }
    static Expr binary(Kind op, Expr a, Expr b) {
        Expr e;
        e.kind_ = op;
        e.kids_.push_back(std::move(a));
        e.kids_.push_back(std::move(b));
        return e;
    }
    static Expr add(Expr a, Expr b) { return binary(Kind::Add, std::move(a), std::move(b)); }
    static Expr sub(Expr a, Expr b) { return binary(Kind::Sub, std::move(a), std::move(b)); }
    static Expr mul(Expr a, Expr b) { return binary(Kind::Mul, std::move(a), std::move(b)); }
    static Expr call(Func f, Expr a) {
        Expr e;
        e.kind_ = Kind::Call;
        e.func_ = f;
        e.kids_.push_back(std::move(a));
        return e;
    }

    Kind kind() const noexcept { return kind_; }
    double literal_value() const noexcept { return value_; }
    int var_index() const noexcept { return index_; }
    Func func() const noexcept { return func_; }
    const std::vector<Expr>& kids() const noexcept { return kids_; }

    double evaluate(const EvalContext& ctx) const {
        const double v = eval_node(ctx);
        if (!std::isfinite(v))
            throw DomainError("expression overflow in '" + excerpt() + "'");
        return v;
    }

    std::string to_string() const {
        std::string out;
        print(out);
        return out;
    }

    bool structurally_equal(const Expr& o) const {
        if (kind_ != o.kind_) return false;
        switch (kind_) {
        case Kind::Literal: return value_ == o.value_;
        case Kind::VarX:
        case Kind::VarU: return index_ == o.index_;
        case Kind::Call:
            if (func_ != o.func_) return false;
            break;
        default: break;
        }
        if (kids_.size() != o.kids_.size()) return false;
        for (std::size_t i = 0; i < kids_.size(); ++i)
            if (!kids_[i].structurally_equal(o.kids_[i])) return false;
        return true;
    }

    bool references_t() const {
        if (kind_ == Kind::VarT) return true;
        for (const Expr& k : kids_)
            if (k.references_t()) return true;
        return false;
    }

private:
    double eval_node(const EvalContext& ctx) const {
        switch (kind_) {
        case Kind::Literal: return value_;
        case Kind::VarX:
            if (index_ >= static_cast<int>(ctx.x.size()))
                throw DimensionError("evaluation context x too short for " + to_string());
            return ctx.x[index_];
        case Kind::VarU:
            if (index_ >= static_cast<int>(ctx.u.size()))
                throw DimensionError("evaluation context u too short for " + to_string());
            return ctx.u[index_];
        case Kind::VarT: return ctx.t;
        case Kind::Neg: return -kids_[0].eval_node(ctx);
        case Kind::Add: return kids_[0].eval_node(ctx) + kids_[1].eval_node(ctx);
        case Kind::Sub: return kids_[0].eval_node(ctx) - kids_[1].eval_node(ctx);
        case Kind::Mul: return kids_[0].eval_node(ctx) * kids_[1].eval_node(ctx);
        case Kind::Div: {
            const double den = kids_[1].eval_node(ctx);
            if (den == 0.0) throw DomainError("division by zero in '" + excerpt() + "'");
            return kids_[0].eval_node(ctx) / den;
        }
        case Kind::Pow: {
            const double b = kids_[0].eval_node(ctx);
            const double e = kids_[1].eval_node(ctx);
            if (b == 0.0 && e < 0.0)
                throw DomainError("zero raised to negative power in '" + excerpt() + "'");
            if (b < 0.0 && e != std::floor(e))
                throw DomainError("negative base with non-integer exponent in '" + excerpt() + "'");
            return std::pow(b, e);
        }
        case Kind::Call: {
            const double a = kids_[0].eval_node(ctx);
            switch (func_) {
            case Func::Sin: return std::sin(a);
            case Func::Cos: return std::cos(a);
            case Func::Exp: return std::exp(a);
            case Func::Ln:
                if (a <= 0.0) throw DomainError("ln of non-positive value in '" + excerpt() + "'");
                return std::log(a);
            case Func::Sqrt:
                if (a < 0.0) throw DomainError("sqrt of negative value in '" + excerpt() + "'");
                return std::sqrt(a);
            case Func::Abs: return std::abs(a);
            }
            break;
        }
        }
        throw NumericError("corrupt expression node");
    }

    std::string excerpt() const {
        std::string s = to_string();
        if (s.size() > 64) s = s.substr(0, 61) + "...";
        return s;
    }

    static const char* func_name(Func f) {
        switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Exp: return "exp";
        case Func::Ln: return "ln";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
        }
        return "?";
    }

    void print(std::string& out) const {
        switch (kind_) {
        case Kind::Literal: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", value_);
            out += buf;
            return;
        }
        case Kind::VarX: out += "x" + std::to_string(index_ + 1); return;
        case Kind::VarU: out += "u" + std::to_string(index_ + 1); return;
        case Kind::VarT: out += "t"; return;
        case Kind::Neg:
            out += "(-";
            kids_[0].print(out);
            out += ")";
            return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div:
        case Kind::Pow: {
            const char* op = kind_ == Kind::Add   ? " + "
                             : kind_ == Kind::Sub ? " - "
                             : kind_ == Kind::Mul ? "*"
                             : kind_ == Kind::Div ? "/"
                                                  : "^";
            out += "(";
            kids_[0].print(out);
            out += op;
            kids_[1].print(out);
            out += ")";
            return;
        }
        case Kind::Call:
            out += func_name(func_);
            out += "(";
            kids_[0].print(out);
            out += ")";
            return;
        }
    }

    Kind kind_;
    Func func_ = Func::Sin;
    int index_ = 0;
    double value_ = 0.0;
    std::vector<Expr> kids_;
};

// ---- parser ----------------------------------------------------------------

namespace detail {

struct Token {
    enum class Type { Number, Ident, Op, LParen, RParen, End };
    Type type;
    std::size_t offset;
    char op = 0;
    double value = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        Token t;
        t.offset = pos_;
        if (pos_ >= src_.size()) {
            t.type = Token::Type::End;
            return t;
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = 0;
            try {
                t.value = std::stod(src_.substr(pos_), &end);
            } catch (const std::exception&) {
                throw ParseError("malformed number", pos_);
            }
            t.type = Token::Type::Number;
            t.text = src_.substr(pos_, end);
            pos_ += end;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
                ++end;
            t.type = Token::Type::Ident;
            t.text = src_.substr(pos_, end - pos_);
            pos_ = end;
            return t;
        }
        if (c == '(') {
            t.type = Token::Type::LParen;
            ++pos_;
            return t;
        }
        if (c == ')') {
            t.type = Token::Type::RParen;
            ++pos_;
            return t;
        }
        if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            t.type = Token::Type::Op;
            t.op = c;
            ++pos_;
            return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;
};

} // namespace detail

// Identifier resolution for the parser. The default problem vocabulary is
// x1..xn, u1..um and (optionally) t; extra named slots map onto x-indices,
// which lets the same grammar describe quadrature kernels in (z, s).
struct SymbolTable {
    int n = 0;
    int m = 0;
    bool allow_t = true;
    std::map<std::string, Expr, std::less<>> named;

    static SymbolTable problem_vars(int n, int m) {
        SymbolTable s;
        s.n = n;
        s.m = m;
        return s;
    }

    static SymbolTable kernel_vars() {
        SymbolTable s;
        s.allow_t = false;
        s.named.emplace("z", Expr::var_x(0));
        s.named.emplace("s", Expr::var_x(1));
        return s;
    }
};

namespace detail {

class Parser {
public:
    Parser(const std::string& src, const SymbolTable& sym) : lexer_(src), sym_(sym) {
        advance();
    }

    Expr parse_all() {
        Expr e = parse_expr();
        if (cur_.type != Token::Type::End)
            throw ParseError("unexpected trailing input", cur_.offset);
        return e;
    }

private:
    void advance() { cur_ = lexer_.next(); }

    // expr := term (('+'|'-') term)*
    Expr parse_expr() {
        Expr e = parse_term();
        while (cur_.type == Token::Type::Op && (cur_.op == '+' || cur_.op == '-')) {
            const char op = cur_.op;
            advance();
            Expr rhs = parse_term();
            e = Expr::binary(op == '+' ? Expr::Kind::Add : Expr::Kind::Sub, std::move(e),
                             std::move(rhs));
        }
        return e;
    }

    // term := unary (('*'|'/') unary)*
    Expr parse_term() {
        Expr e = parse_unary();
        while (cur_.type == Token::Type::Op && (cur_.op == '*' || cur_.op == '/')) {
            const char op = cur_.op;
            advance();
            Expr rhs = parse_unary();
            e = Expr::binary(op == '*' ? Expr::Kind::Mul : Expr::Kind::Div, std::move(e),
                             std::move(rhs));
        }
        return e;
    }

    // unary := '-' unary | power   (unary minus binds looser than '^')
    Expr parse_unary() {
        if (cur_.type == Token::Type::Op && cur_.op == '-') {
            advance();
            return Expr::neg(parse_unary());
        }
        if (cur_.type == Token::Type::Op && cur_.op == '+') {
            advance();
            return parse_unary();
        }
        return parse_power();
    }

    // power := primary ('^' unary)?   (right-associative)
    Expr parse_power() {
        Expr base = parse_primary();
        if (cur_.type == Token::Type::Op && cur_.op == '^') {
            advance();
            Expr exponent = parse_unary();
            return Expr::binary(Expr::Kind::Pow, std::move(base), std::move(exponent));
        }
        return base;
    }

    Expr parse_primary() {
        switch (cur_.type) {
        case Token::Type::Number: {
            const double v = cur_.value;
            advance();
            return Expr::literal(v);
        }
        case Token::Type::Ident: {
            const std::string name = cur_.text;
            const std::size_t at = cur_.offset;
            advance();
            if (auto f = function_id(name)) {
                if (cur_.type != Token::Type::LParen)
                    throw ParseError("expected '(' after function '" + name + "'", cur_.offset);
                advance();
                Expr arg = parse_expr();
                expect_rparen();
                return Expr::call(*f, std::move(arg));
            }
            return resolve(name, at);
        }
        case Token::Type::LParen: {
            advance();
            Expr e = parse_expr();
            expect_rparen();
            return e;
        }
        default:
            throw ParseError("expected a number, variable, function or '('", cur_.offset);
        }
    }

    void expect_rparen() {
        if (cur_.type != Token::Type::RParen) throw ParseError("expected ')'", cur_.offset);
        advance();
    }

    static std::optional<Expr::Func> function_id(const std::string& name) {
        if (name == "sin") return Expr::Func::Sin;
        if (name == "cos") return Expr::Func::Cos;
        if (name == "exp") return Expr::Func::Exp;
        if (name == "ln") return Expr::Func::Ln;
        if (name == "sqrt") return Expr::Func::Sqrt;
        if (name == "abs") return Expr::Func::Abs;
        return std::nullopt;
    }

    Expr resolve(const std::string& name, std::size_t at) const {
        if (auto it = sym_.named.find(name); it != sym_.named.end()) return it->second;
        if (name == "t") {
            if (!sym_.allow_t) throw ParseError("'t' is not available here", at);
            return Expr::var_t();
        }
        if ((name[0] == 'x' || name[0] == 'u') && name.size() > 1 &&
            std::all_of(name.begin() + 1, name.end(),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            const long idx = std::strtol(name.c_str() + 1, nullptr, 10);
            const int limit = name[0] == 'x' ? sym_.n : sym_.m;
            if (idx < 1 || idx > limit)
                throw ParseError("variable '" + name + "' outside declared range (1.." +
                                     std::to_string(limit) + ")",
                                 at);
            return name[0] == 'x' ? Expr::var_x(static_cast<int>(idx) - 1)
                                  : Expr::var_u(static_cast<int>(idx) - 1);
        }
        throw ParseError("unknown identifier '" + name + "'", at);
    }

    Lexer lexer_;
    const SymbolTable& sym_;
    Token cur_;
};

} // namespace detail

// Parses an expression over x1..xn, u1..um, t. Standard precedence:
// ^ above unary minus above * / above + -, all left-associative except ^.
inline Expr parse(const std::string& text, int n, int m) {
    if (text.empty()) throw ParseError("empty expression", 0);
    const SymbolTable sym = SymbolTable::problem_vars(n, m);
    return detail::Parser(text, sym).parse_all();
}

inline Expr parse_with_symbols(const std::string& text, const SymbolTable& sym) {
    if (text.empty()) throw ParseError("empty expression", 0);
    return detail::Parser(text, sym).parse_all();
}

// ---- compiled form ----------------------------------------------------------

// Flat postfix tape for fast repeated evaluation. Semantically identical to
// Expr::evaluate, including domain checks; error messages carry the printed
// subexpression captured at compile time.
class CompiledExpr {
public:
    CompiledExpr() = default;

    explicit CompiledExpr(const Expr& e) {
        compile(e);
        int depth = 0;
        max_stack_ = 1;
        for (const Op& op : ops_) {
            depth += stack_delta(op.code);
            max_stack_ = std::max(max_stack_, depth);
        }
    }

    double eval(std::span<const double> x, std::span<const double> u, double t) const {
        thread_local std::vector<double> stack;
        if (stack.size() < static_cast<std::size_t>(max_stack_)) stack.resize(max_stack_);
        int top = -1;
        for (const Op& op : ops_) {
            switch (op.code) {
            case Code::PushLit: stack[++top] = op.value; break;
            case Code::PushX: stack[++top] = x[op.index]; break;
            case Code::PushU: stack[++top] = u[op.index]; break;
            case Code::PushT: stack[++top] = t; break;
            case Code::Neg: stack[top] = -stack[top]; break;
            case Code::Add: --top; stack[top] += stack[top + 1]; break;
            case Code::Sub: --top; stack[top] -= stack[top + 1]; break;
            case Code::Mul: --top; stack[top] *= stack[top + 1]; break;
            case Code::Div:
                --top;
                if (stack[top + 1] == 0.0)
                    throw DomainError("division by zero in '" + labels_[op.index] + "'");
                stack[top] /= stack[top + 1];
                break;
            case Code::Pow: {
                --top;
                const double b = stack[top], e = stack[top + 1];
                if (b == 0.0 && e < 0.0)
                    throw DomainError("zero raised to negative power in '" + labels_[op.index] + "'");
                if (b < 0.0 && e != std::floor(e))
                    throw DomainError("negative base with non-integer exponent in '" +
                                      labels_[op.index] + "'");
                stack[top] = std::pow(b, e);
                break;
            }
            case Code::Sin: stack[top] = std::sin(stack[top]); break;
            case Code::Cos: stack[top] = std::cos(stack[top]); break;
            case Code::Exp: stack[top] = std::exp(stack[top]); break;
            case Code::Ln:
                if (stack[top] <= 0.0)
                    throw DomainError("ln of non-positive value in '" + labels_[op.index] + "'");
                stack[top] = std::log(stack[top]);
                break;
            case Code::Sqrt:
                if (stack[top] < 0.0)
                    throw DomainError("sqrt of negative value in '" + labels_[op.index] + "'");
                stack[top] = std::sqrt(stack[top]);
                break;
            case Code::Abs: stack[top] = std::abs(stack[top]); break;
            }
        }
        const double v = stack[0];
        if (!std::isfinite(v)) throw DomainError("expression overflow");
        return v;
    }

private:
    enum class Code : std::uint8_t {
        PushLit, PushX, PushU, PushT, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Ln, Sqrt, Abs
    };
    struct Op {
        Code code;
        int index = 0;
        double value = 0.0;
    };

    static int stack_delta(Code c) {
        switch (c) {
        case Code::PushLit:
        case Code::PushX:
        case Code::PushU:
        case Code::PushT: return 1;
        case Code::Add:
        case Code::Sub:
        case Code::Mul:
        case Code::Div:
        case Code::Pow: return -1;
        default: return 0;
        }
    }

    int add_label(const Expr& e) {
        labels_.push_back(e.to_string());
        if (labels_.back().size() > 64) labels_.back() = labels_.back().substr(0, 61) + "...";
        return static_cast<int>(labels_.size()) - 1;
    }

    void compile(const Expr& e) {
        using K = Expr::Kind;
        switch (e.kind()) {
        case K::Literal: ops_.push_back({Code::PushLit, 0, e.literal_value()}); return;
        case K::VarX: ops_.push_back({Code::PushX, e.var_index(), 0.0}); return;
        case K::VarU: ops_.push_back({Code::PushU, e.var_index(), 0.0}); return;
        case K::VarT: ops_.push_back({Code::PushT, 0, 0.0}); return;
        case K::Neg:
            compile(e.kids()[0]);
            ops_.push_back({Code::Neg, 0, 0.0});
            return;
        case K::Add:
        case K::Sub:
        case K::Mul:
            compile(e.kids()[0]);
            compile(e.kids()[1]);
            ops_.push_back({e.kind() == K::Add   ? Code::Add
                            : e.kind() == K::Sub ? Code::Sub
                                                 : Code::Mul,
                            0, 0.0});
            return;
        case K::Div:
        case K::Pow:
            compile(e.kids()[0]);
            compile(e.kids()[1]);
            ops_.push_back({e.kind() == K::Div ? Code::Div : Code::Pow, add_label(e), 0.0});
            return;
        case K::Call: {
            compile(e.kids()[0]);
            Code c = Code::Abs;
            int idx = 0;
            switch (e.func()) {
            case Expr::Func::Sin: c = Code::Sin; break;
            case Expr::Func::Cos: c = Code::Cos; break;
            case Expr::Func::Exp: c = Code::Exp; break;
            case Expr::Func::Ln: c = Code::Ln; idx = add_label(e); break;
            case Expr::Func::Sqrt: c = Code::Sqrt; idx = add_label(e); break;
            case Expr::Func::Abs: c = Code::Abs; break;
            }
            ops_.push_back({c, idx, 0.0});
            return;
        }
        }
    }

    std::vector<Op> ops_;
    std::vector<std::string> labels_;
    int max_stack_ = 1;
};

} // namespace daestab
