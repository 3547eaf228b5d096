#include "probc/parser.hpp"

#include <cctype>
#include <optional>
#include <vector>

#include "probc/errors.hpp"

namespace probc {

namespace {

enum class Tok {
    Ident,
    Number,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LessT,
    BindArrow,
    Eof,
};

struct Token {
    Tok kind;
    std::string text;
    int line, column;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) {
                out.push_back({Tok::Eof, "", line_, col_});
                return out;
            }
            char c = src_[pos_];
            int l = line_, col = col_;
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string t;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                    t += advance();
                }
                out.push_back({Tok::Ident, t, l, col});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && pos_ + 1 < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                std::string t;
                bool dot = false;
                while (pos_ < src_.size() &&
                       (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                        (!dot && src_[pos_] == '.'))) {
                    if (src_[pos_] == '.') dot = true;
                    t += advance();
                }
                out.push_back({Tok::Number, t, l, col});
                continue;
            }
            switch (c) {
                case '(': out.push_back({Tok::LParen, "(", l, col}); advance(); break;
                case ')': out.push_back({Tok::RParen, ")", l, col}); advance(); break;
                case '[': out.push_back({Tok::LBracket, "[", l, col}); advance(); break;
                case ']': out.push_back({Tok::RBracket, "]", l, col}); advance(); break;
                case ',': out.push_back({Tok::Comma, ",", l, col}); advance(); break;
                case ';': out.push_back({Tok::Semi, ";", l, col}); advance(); break;
                case '+': out.push_back({Tok::Plus, "+", l, col}); advance(); break;
                case '-': out.push_back({Tok::Minus, "-", l, col}); advance(); break;
                case '*': out.push_back({Tok::Star, "*", l, col}); advance(); break;
                case '/': out.push_back({Tok::Slash, "/", l, col}); advance(); break;
                case '^': out.push_back({Tok::Caret, "^", l, col}); advance(); break;
                case '<':
                    advance();
                    if (pos_ < src_.size() && src_[pos_] == '~') {
                        advance();
                        out.push_back({Tok::BindArrow, "<~", l, col});
                    } else {
                        out.push_back({Tok::LessT, "<", l, col});
                    }
                    break;
                default:
                    throw SyntaxError(std::string("unexpected character '") + c + "'", l, col);
            }
        }
    }

private:
    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                return;
            }
        }
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

// Binder patterns: a name or a pair of patterns.
struct Pattern {
    std::optional<Name> leaf;
    std::unique_ptr<Pattern> first, second;
    int line = 0, column = 0;
};

class Parser {
public:
    Parser(std::vector<Token> toks, NameSupply& supply)
        : toks_(std::move(toks)), supply_(supply) {}

    ExprPtr parse_program() {
        auto e = parse_expr();
        expect(Tok::Eof, "end of input");
        return e;
    }

private:
    const Token& peek(int k = 0) const {
        std::size_t i = idx_ + k;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    Token take() { return toks_[idx_ < toks_.size() - 1 ? idx_++ : idx_]; }
    bool at(Tok k) const { return peek().kind == k; }
    Token expect(Tok k, const std::string& what) {
        if (!at(k)) {
            throw SyntaxError("expected " + what + ", found '" + peek().text + "'", peek().line,
                              peek().column);
        }
        return take();
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw SyntaxError(msg, peek().line, peek().column);
    }

    static SourceSpan span_of(const Token& t) { return SourceSpan{t.line, t.column, t.line, t.column}; }

    ExprPtr parse_expr() {
        // Bind needs unbounded lookahead over a pattern; once the arrow is
        // seen the commitment is final, so later errors surface properly.
        std::size_t save = idx_;
        std::optional<Pattern> pat;
        if (at(Tok::Ident) || at(Tok::LParen)) {
            try {
                Pattern p = parse_pattern();
                if (at(Tok::BindArrow)) pat = std::move(p);
            } catch (const SyntaxError&) {
                // not a pattern; fall through to expression
            }
        }
        if (!pat) {
            idx_ = save;
            return parse_comparison();
        }
        take();  // <~
        ExprPtr rhs = parse_expr();
        expect(Tok::Semi, "';'");
        ExprPtr body = parse_expr();
        return make_bind(*pat, rhs, body);
    }

    Pattern parse_pattern() {
        Pattern p;
        p.line = peek().line;
        p.column = peek().column;
        if (at(Tok::Ident)) {
            Token t = take();
            if (is_keyword(t.text)) {
                throw SyntaxError("'" + t.text + "' is reserved", t.line, t.column);
            }
            p.leaf = Name{t.text, 0};
            return p;
        }
        expect(Tok::LParen, "pattern");
        p.first = std::make_unique<Pattern>(parse_pattern());
        expect(Tok::Comma, "','");
        p.second = std::make_unique<Pattern>(parse_pattern());
        expect(Tok::RParen, "')'");
        return p;
    }

    // Tuple patterns desugar to one variable plus projections.
    ExprPtr make_bind(const Pattern& pat, ExprPtr rhs, ExprPtr body) {
        if (pat.leaf) return bind(*pat.leaf, std::move(rhs), std::move(body));
        Name p = supply_.fresh("%p");
        std::map<Name, ExprPtr> subst;
        collect_pattern_subst(pat, var(p), subst);
        return bind(p, std::move(rhs), substitute(body, subst, supply_));
    }

    ExprPtr make_lam(const Pattern& pat, ExprPtr body) {
        if (pat.leaf) return lam(*pat.leaf, std::move(body));
        Name p = supply_.fresh("%p");
        std::map<Name, ExprPtr> subst;
        collect_pattern_subst(pat, var(p), subst);
        return lam(p, substitute(body, subst, supply_));
    }

    void collect_pattern_subst(const Pattern& pat, ExprPtr path, std::map<Name, ExprPtr>& out) {
        if (pat.leaf) {
            if (out.count(*pat.leaf)) {
                throw SyntaxError("duplicate name in pattern: '" + pat.leaf->text + "'", pat.line,
                                  pat.column);
            }
            out[*pat.leaf] = std::move(path);
            return;
        }
        collect_pattern_subst(*pat.first, fst(path), out);
        collect_pattern_subst(*pat.second, snd(path), out);
    }

    ExprPtr parse_comparison() {
        ExprPtr first = parse_additive();
        if (!at(Tok::LessT)) return first;
        // a < b [< c ...]: a chain desugars to nested conjunctions.
        std::vector<ExprPtr> operands{first};
        while (at(Tok::LessT)) {
            take();
            operands.push_back(parse_additive());
        }
        ExprPtr acc = less(operands[operands.size() - 2], operands.back());
        for (std::size_t i = operands.size() - 2; i > 0; --i) {
            acc = chain_and(less(operands[i - 1], operands[i]), acc);
        }
        return acc;
    }

    ExprPtr parse_additive() {
        ExprPtr e = parse_multiplicative();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            bool plus = take().kind == Tok::Plus;
            ExprPtr r = parse_multiplicative();
            e = plus ? add(e, r) : sub(e, r);
        }
        return e;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr e = parse_unary();
        while (at(Tok::Star) || at(Tok::Slash)) {
            bool star = take().kind == Tok::Star;
            ExprPtr r = parse_unary();
            // Fold literal fractions so `7/10` round-trips as one rational.
            if (!star && e->tag == Tag::Lit && r->tag == Tag::Lit && r->lit != 0) {
                e = lit(e->lit / r->lit);
            } else {
                e = star ? mul(e, r) : div(e, r);
            }
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (at(Tok::Minus)) {
            take();
            ExprPtr e = parse_unary();
            if (e->tag == Tag::Lit) return lit(-e->lit);
            if (e->tag == Tag::Infinity) return infinity(!e->negative);
            return neg(e);
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_postfix();
        if (at(Tok::Caret)) {
            take();
            return pow(base, parse_unary());  // right-associative
        }
        return base;
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (at(Tok::LBracket)) {
            Token t = take();
            Token n = expect(Tok::Number, "0 or 1");
            expect(Tok::RBracket, "']'");
            if (n.text == "0") e = fst(e);
            else if (n.text == "1") e = snd(e);
            else throw SyntaxError("projection index must be 0 or 1", t.line, t.column);
        }
        return e;
    }

    static bool is_keyword(const std::string& s) {
        static const std::set<std::string> kw = {
            "If",    "Lam",   "App",  "Sum",         "Int",       "Uniform", "Normal",
            "Gamma", "Beta",  "Weight", "Dirac",     "Categorical", "Superpose",
            "Fst",   "Snd",   "exp",   "log",        "sqrt",      "pi",      "e",
            "inf",   "Unit"};
        return kw.count(s) > 0;
    }

    Name parse_plain_name() {
        Token t = expect(Tok::Ident, "identifier");
        if (is_keyword(t.text)) {
            throw SyntaxError("'" + t.text + "' is reserved", t.line, t.column);
        }
        return Name{t.text, 0};
    }

    std::vector<ExprPtr> parse_weighted_pairs(const std::string& what) {
        // Categorical((w, e), (w, e), ...) with zero or more pairs.
        std::vector<ExprPtr> flat;
        expect(Tok::LParen, "'('");
        if (at(Tok::RParen)) {
            take();
            return flat;
        }
        while (true) {
            expect(Tok::LParen, "'(' starting a (weight, " + what + ") pair");
            flat.push_back(parse_expr());
            expect(Tok::Comma, "','");
            flat.push_back(parse_expr());
            expect(Tok::RParen, "')'");
            if (at(Tok::Comma)) {
                take();
                continue;
            }
            break;
        }
        expect(Tok::RParen, "')'");
        return flat;
    }

    ExprPtr parse_primary() {
        const Token t = peek();
        if (t.kind == Tok::Number) {
            take();
            auto e = lit(rational_from_decimal(t.text));
            const_cast<Expr&>(*e).span = span_of(t);
            return e;
        }
        if (t.kind == Tok::LParen) {
            take();
            std::vector<ExprPtr> parts{parse_expr()};
            while (at(Tok::Comma)) {
                take();
                parts.push_back(parse_expr());
            }
            expect(Tok::RParen, "')'");
            return parts.size() == 1 ? parts[0] : tuple(parts);
        }
        if (t.kind != Tok::Ident) fail("expected an expression, found '" + t.text + "'");
        take();
        const std::string& w = t.text;

        auto unary_fn = [&](ExprPtr (*f)(ExprPtr)) {
            expect(Tok::LParen, "'('");
            auto a = parse_expr();
            expect(Tok::RParen, "')'");
            return f(std::move(a));
        };
        auto binary_fn = [&](ExprPtr (*f)(ExprPtr, ExprPtr)) {
            expect(Tok::LParen, "'('");
            auto a = parse_expr();
            expect(Tok::Comma, "','");
            auto b = parse_expr();
            expect(Tok::RParen, "')'");
            return f(std::move(a), std::move(b));
        };

        if (w == "pi") return constant(SymConst::Pi);
        if (w == "e") return constant(SymConst::Euler);
        if (w == "inf") return infinity(false);
        if (w == "Unit") return unit_e();
        if (w == "exp") return unary_fn(&probc::exp);
        if (w == "log") return unary_fn(&probc::log);
        if (w == "sqrt") return unary_fn(&probc::sqrt);
        if (w == "Fst") return unary_fn(&probc::fst);
        if (w == "Snd") return unary_fn(&probc::snd);
        if (w == "Dirac") return unary_fn(&probc::dirac);
        if (w == "Uniform") return binary_fn(&probc::uniform);
        if (w == "Normal") return binary_fn(&probc::normal);
        if (w == "Gamma") return binary_fn(&probc::gamma_d);
        if (w == "Beta") return binary_fn(&probc::beta_d);
        if (w == "Weight") return binary_fn(&probc::weight);
        if (w == "App") return binary_fn(&probc::app);
        if (w == "If") {
            expect(Tok::LParen, "'('");
            auto c = parse_expr();
            expect(Tok::Comma, "','");
            auto yes = parse_expr();
            expect(Tok::Comma, "','");
            auto no = parse_expr();
            expect(Tok::RParen, "')'");
            return if_(std::move(c), std::move(yes), std::move(no));
        }
        if (w == "Lam") {
            expect(Tok::LParen, "'('");
            Pattern pat = parse_pattern();
            expect(Tok::Comma, "','");
            auto body = parse_expr();
            expect(Tok::RParen, "')'");
            return make_lam(pat, std::move(body));
        }
        if (w == "Sum" || w == "Int") {
            expect(Tok::LParen, "'('");
            auto lo = parse_expr();
            expect(Tok::Comma, "','");
            auto hi = parse_expr();
            expect(Tok::Comma, "','");
            Name v = parse_plain_name();
            expect(Tok::Comma, "','");
            auto body = parse_expr();
            expect(Tok::RParen, "')'");
            return w == "Sum" ? sum(lo, hi, v, body) : integral(lo, hi, v, body);
        }
        if (w == "Categorical") return categorical(parse_weighted_pairs("outcome"));
        if (w == "Superpose") return superpose(parse_weighted_pairs("measure"));
        if (is_keyword(w)) fail("misplaced keyword '" + w + "'");
        if (at(Tok::LParen)) {
            throw UnknownPrimitive("unknown primitive '" + w + "'", t.line, t.column);
        }

        auto e = var(Name{w, 0});
        const_cast<Expr&>(*e).span = span_of(t);
        return e;
    }

    std::vector<Token> toks_;
    std::size_t idx_ = 0;
    NameSupply& supply_;
};

}  // namespace

ExprPtr parse(const std::string& text, NameSupply& supply) {
    Lexer lexer(text);
    Parser p(lexer.run(), supply);
    return p.parse_program();
}

ExprPtr parse(const std::string& text) {
    NameSupply supply;
    return parse(text, supply);
}

}  // namespace probc
