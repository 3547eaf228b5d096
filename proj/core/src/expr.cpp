#include "probc/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "probc/errors.hpp"

namespace probc {

std::string SourceSpan::to_string() const {
    if (!known()) return "<no location>";
    std::ostringstream os;
    os << line << ":" << column;
    return os.str();
}

Rational rational_from_decimal(const std::string& text) {
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(BigInt(text));
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (whole.empty()) whole = "0";
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    BigInt num = BigInt(whole) * scale + (frac.empty() ? BigInt(0) : BigInt(frac));
    return Rational(num, scale);
}

Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::domain_error("rational_from_double: non-finite");
    if (x == 0.0) return Rational(0);
    int exp2 = 0;
    double m = std::frexp(x, &exp2);  // x = m * 2^exp2, 0.5 <= |m| < 1
    // 53 bits of mantissa
    BigInt mant = BigInt(static_cast<long long>(std::ldexp(m, 53)));
    exp2 -= 53;
    Rational r(mant);
    BigInt p = BigInt(1) << static_cast<unsigned>(std::abs(exp2));
    if (exp2 >= 0) r *= Rational(p);
    else r /= Rational(p);
    return r;
}

std::string rational_to_string(const Rational& q) {
    std::ostringstream os;
    if (is_integer(q)) {
        os << numerator(q);
    } else {
        os << numerator(q) << "/" << denominator(q);
    }
    return os.str();
}

namespace {
ExprPtr node(Tag t, std::vector<ExprPtr> kids) {
    return std::make_shared<Expr>(t, std::move(kids));
}
}  // namespace

ExprPtr var(Name n) {
    auto e = node(Tag::Var, {});
    const_cast<Expr&>(*e).name = std::move(n);
    return e;
}
ExprPtr lit(Rational q) {
    auto e = node(Tag::Lit, {});
    const_cast<Expr&>(*e).lit = std::move(q);
    return e;
}
ExprPtr lit(long n) { return lit(Rational(n)); }
ExprPtr constant(SymConst c) {
    auto e = node(Tag::Const, {});
    const_cast<Expr&>(*e).sym = c;
    return e;
}
ExprPtr infinity(bool negative) {
    auto e = node(Tag::Infinity, {});
    const_cast<Expr&>(*e).negative = negative;
    return e;
}
ExprPtr unit_e() { return node(Tag::UnitE, {}); }
ExprPtr neg(ExprPtr a) {
    // Negated and fractional literals have one canonical form; the parser
    // produces it and the printer relies on it for round-trips.
    if (a->tag == Tag::Lit) return lit(-a->lit);
    if (a->tag == Tag::Infinity) return infinity(!a->negative);
    return node(Tag::Neg, {std::move(a)});
}
ExprPtr add(ExprPtr a, ExprPtr b) { return node(Tag::Add, {std::move(a), std::move(b)}); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return node(Tag::Sub, {std::move(a), std::move(b)}); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return node(Tag::Mul, {std::move(a), std::move(b)}); }
ExprPtr div(ExprPtr a, ExprPtr b) {
    if (a->tag == Tag::Lit && b->tag == Tag::Lit && b->lit != 0) return lit(a->lit / b->lit);
    return node(Tag::Div, {std::move(a), std::move(b)});
}
ExprPtr pow(ExprPtr a, ExprPtr b) { return node(Tag::Pow, {std::move(a), std::move(b)}); }
ExprPtr less(ExprPtr a, ExprPtr b) { return node(Tag::Less, {std::move(a), std::move(b)}); }
ExprPtr exp(ExprPtr a) { return node(Tag::Exp, {std::move(a)}); }
ExprPtr log(ExprPtr a) { return node(Tag::Log, {std::move(a)}); }
ExprPtr sqrt(ExprPtr a) { return node(Tag::Sqrt, {std::move(a)}); }
ExprPtr if_(ExprPtr c, ExprPtr t, ExprPtr e) {
    return node(Tag::If, {std::move(c), std::move(t), std::move(e)});
}
ExprPtr sum(ExprPtr lo, ExprPtr hi, Name v, ExprPtr body) {
    auto e = node(Tag::Sum, {std::move(lo), std::move(hi), std::move(body)});
    const_cast<Expr&>(*e).name = std::move(v);
    return e;
}
ExprPtr integral(ExprPtr lo, ExprPtr hi, Name v, ExprPtr body) {
    auto e = node(Tag::Int, {std::move(lo), std::move(hi), std::move(body)});
    const_cast<Expr&>(*e).name = std::move(v);
    return e;
}
ExprPtr lam(Name v, ExprPtr body) {
    auto e = node(Tag::Lam, {std::move(body)});
    const_cast<Expr&>(*e).name = std::move(v);
    return e;
}
ExprPtr app(ExprPtr f, ExprPtr a) { return node(Tag::App, {std::move(f), std::move(a)}); }
ExprPtr pair(ExprPtr a, ExprPtr b) { return node(Tag::Pair, {std::move(a), std::move(b)}); }
ExprPtr fst(ExprPtr a) { return node(Tag::Fst, {std::move(a)}); }
ExprPtr snd(ExprPtr a) { return node(Tag::Snd, {std::move(a)}); }
ExprPtr uniform(ExprPtr lo, ExprPtr hi) {
    return node(Tag::Uniform, {std::move(lo), std::move(hi)});
}
ExprPtr normal(ExprPtr mean, ExprPtr sd) {
    return node(Tag::Normal, {std::move(mean), std::move(sd)});
}
ExprPtr gamma_d(ExprPtr shape, ExprPtr scale) {
    return node(Tag::Gamma, {std::move(shape), std::move(scale)});
}
ExprPtr beta_d(ExprPtr a, ExprPtr b) { return node(Tag::Beta, {std::move(a), std::move(b)}); }
ExprPtr weight(ExprPtr w, ExprPtr point) {
    return node(Tag::Weight, {std::move(w), std::move(point)});
}
ExprPtr dirac(ExprPtr point) { return weight(lit(1), std::move(point)); }
ExprPtr categorical(std::vector<ExprPtr> flat_pairs) {
    return node(Tag::Categorical, std::move(flat_pairs));
}
ExprPtr superpose(std::vector<ExprPtr> flat_pairs) {
    return node(Tag::Superpose, std::move(flat_pairs));
}
ExprPtr bind(Name v, ExprPtr rhs, ExprPtr body) {
    auto e = node(Tag::Bind, {std::move(rhs), std::move(body)});
    const_cast<Expr&>(*e).name = std::move(v);
    return e;
}
ExprPtr with_kids(const ExprPtr& e, std::vector<ExprPtr> kids) {
    auto r = std::make_shared<Expr>(e->tag, std::move(kids));
    r->name = e->name;
    r->lit = e->lit;
    r->sym = e->sym;
    r->negative = e->negative;
    r->span = e->span;
    return r;
}

ExprPtr bool_true() { return less(lit(0), lit(1)); }
ExprPtr bool_false() { return less(lit(0), lit(0)); }
bool is_bool_true(const ExprPtr& e) {
    return e->tag == Tag::Less && is_lit(e->kids[0], Rational(0)) && is_lit(e->kids[1], Rational(1));
}
bool is_bool_false(const ExprPtr& e) {
    return e->tag == Tag::Less && is_lit(e->kids[0], Rational(0)) && is_lit(e->kids[1], Rational(0));
}
ExprPtr chain_and(ExprPtr a, ExprPtr b) {
    return if_(std::move(a), std::move(b), bool_false());
}
ExprPtr eq_indicator(ExprPtr a, ExprPtr b) {
    return if_(less(a, b), lit(0), if_(less(b, a), lit(0), lit(1)));
}

bool is_lit(const ExprPtr& e, const Rational& q) { return e->tag == Tag::Lit && e->lit == q; }
bool is_dirac(const ExprPtr& e) {
    return e->tag == Tag::Weight && is_lit(e->kids[0], Rational(1));
}

ExprPtr tuple(const std::vector<ExprPtr>& parts) {
    if (parts.empty()) throw Error("tuple: empty");
    ExprPtr acc = parts.back();
    for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) acc = pair(*it, acc);
    return acc;
}

namespace {
void free_vars_into(const ExprPtr& e, std::set<Name>& bound, std::set<Name>& out) {
    if (e->tag == Tag::Var) {
        if (!bound.count(e->name)) out.insert(e->name);
        return;
    }
    int body = e->body_index();
    for (int i = 0; i < static_cast<int>(e->kids.size()); ++i) {
        if (i == body) {
            bool was_bound = bound.count(e->name) > 0;
            bound.insert(e->name);
            free_vars_into(e->kids[i], bound, out);
            if (!was_bound) bound.erase(e->name);
        } else {
            free_vars_into(e->kids[i], bound, out);
        }
    }
}
}  // namespace

std::set<Name> free_vars(const ExprPtr& e) {
    std::set<Name> bound, out;
    free_vars_into(e, bound, out);
    return out;
}

bool occurs_free(const ExprPtr& e, const Name& n) {
    if (e->tag == Tag::Var) return e->name == n;
    int body = e->body_index();
    for (int i = 0; i < static_cast<int>(e->kids.size()); ++i) {
        if (i == body && e->name == n) continue;
        if (occurs_free(e->kids[i], n)) return true;
    }
    return false;
}

namespace {
bool mentions_any_key(const ExprPtr& e, const std::map<Name, ExprPtr>& m) {
    for (const auto& [k, v] : m) {
        (void)v;
        if (occurs_free(e, k)) return true;
    }
    return false;
}

ExprPtr subst_go(const ExprPtr& e, const std::map<Name, ExprPtr>& subst,
                 const std::set<Name>& avoid, NameSupply& supply) {
    if (subst.empty()) return e;
    if (e->tag == Tag::Var) {
        auto it = subst.find(e->name);
        return it == subst.end() ? e : it->second;
    }
    int body = e->body_index();
    if (body < 0) {
        std::vector<ExprPtr> kids;
        kids.reserve(e->kids.size());
        bool changed = false;
        for (const auto& k : e->kids) {
            auto nk = subst_go(k, subst, avoid, supply);
            changed |= nk != k;
            kids.push_back(std::move(nk));
        }
        return changed ? with_kids(e, std::move(kids)) : e;
    }

    // Binder: drop a shadowed mapping, rename when capture threatens.
    std::map<Name, ExprPtr> inner = subst;
    inner.erase(e->name);
    Name binder = e->name;
    ExprPtr body_expr = e->kids[body];
    if (!inner.empty() && avoid.count(binder) && mentions_any_key(body_expr, inner)) {
        Name fresh = supply.fresh(binder.text);
        body_expr = subst_go(body_expr, {{binder, var(fresh)}}, {}, supply);
        binder = fresh;
    }
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids.size());
    for (int i = 0; i < static_cast<int>(e->kids.size()); ++i) {
        if (i == body) {
            kids.push_back(inner.empty() ? body_expr : subst_go(body_expr, inner, avoid, supply));
        } else {
            kids.push_back(subst_go(e->kids[i], subst, avoid, supply));
        }
    }
    auto r = with_kids(e, std::move(kids));
    const_cast<Expr&>(*r).name = binder;
    return r;
}
}  // namespace

ExprPtr substitute(const ExprPtr& e, const std::map<Name, ExprPtr>& subst, NameSupply& supply) {
    if (subst.empty()) return e;
    std::set<Name> avoid;
    for (const auto& [k, v] : subst) {
        (void)k;
        auto fv = free_vars(v);
        avoid.insert(fv.begin(), fv.end());
    }
    return subst_go(e, subst, avoid, supply);
}

ExprPtr substitute(const ExprPtr& e, const Name& x, const ExprPtr& v, NameSupply& supply) {
    return substitute(e, std::map<Name, ExprPtr>{{x, v}}, supply);
}

namespace {
bool alpha_go(const ExprPtr& a, const ExprPtr& b, std::map<Name, int>& la,
              std::map<Name, int>& lb, int& depth) {
    if (a->tag != b->tag) return false;
    switch (a->tag) {
        case Tag::Var: {
            auto ia = la.find(a->name);
            auto ib = lb.find(b->name);
            if (ia != la.end() || ib != lb.end()) {
                return ia != la.end() && ib != lb.end() && ia->second == ib->second;
            }
            return a->name == b->name;  // both free
        }
        case Tag::Lit: return a->lit == b->lit;
        case Tag::Const: return a->sym == b->sym;
        case Tag::Infinity: return a->negative == b->negative;
        default: break;
    }
    if (a->kids.size() != b->kids.size()) return false;
    int body = a->body_index();
    for (int i = 0; i < static_cast<int>(a->kids.size()); ++i) {
        if (i == body) {
            auto sa = la, sb = lb;
            sa[a->name] = depth;
            sb[b->name] = depth;
            ++depth;
            if (!alpha_go(a->kids[i], b->kids[i], sa, sb, depth)) return false;
        } else {
            if (!alpha_go(a->kids[i], b->kids[i], la, lb, depth)) return false;
        }
    }
    return true;
}
}  // namespace

bool alpha_equal(const ExprPtr& a, const ExprPtr& b) {
    std::map<Name, int> la, lb;
    int depth = 0;
    return alpha_go(a, b, la, lb, depth);
}

bool exprs_identical(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (a->tag != b->tag) return false;
    switch (a->tag) {
        case Tag::Var: return a->name == b->name;
        case Tag::Lit: return a->lit == b->lit;
        case Tag::Const: return a->sym == b->sym;
        case Tag::Infinity: return a->negative == b->negative;
        default: break;
    }
    if (a->is_binder() && a->name != b->name) return false;
    if (a->kids.size() != b->kids.size()) return false;
    for (std::size_t i = 0; i < a->kids.size(); ++i) {
        if (!exprs_identical(a->kids[i], b->kids[i])) return false;
    }
    return true;
}

ExprPtr replace_subterm(const ExprPtr& e, const ExprPtr& target, const ExprPtr& replacement) {
    if (exprs_identical(e, target)) return replacement;
    if (e->kids.empty()) return e;
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const auto& k : e->kids) {
        auto nk = replace_subterm(k, target, replacement);
        changed |= nk != k;
        kids.push_back(std::move(nk));
    }
    return changed ? with_kids(e, std::move(kids)) : e;
}

std::size_t expr_size(const ExprPtr& e) {
    std::size_t n = 1;
    for (const auto& k : e->kids) n += expr_size(k);
    return n;
}

namespace {
void key_into(const ExprPtr& e, std::string& out) {
    out += std::to_string(static_cast<int>(e->tag));
    switch (e->tag) {
        case Tag::Var:
            out += ':';
            out += e->name.text;
            out += '#';
            out += std::to_string(e->name.uid);
            break;
        case Tag::Lit:
            out += ':';
            out += rational_to_string(e->lit);
            break;
        case Tag::Const: out += e->sym == SymConst::Pi ? ":pi" : ":e"; break;
        case Tag::Infinity: out += e->negative ? ":-inf" : ":inf"; break;
        default:
            if (e->is_binder()) {
                out += ':';
                out += e->name.text;
                out += '#';
                out += std::to_string(e->name.uid);
            }
            break;
    }
    if (!e->kids.empty()) {
        out += '(';
        for (const auto& k : e->kids) {
            key_into(k, out);
            out += ',';
        }
        out += ')';
    }
}
}  // namespace

std::string internal_key(const ExprPtr& e) {
    std::string out;
    out.reserve(64);
    key_into(e, out);
    return out;
}

ExprPtr apply(const ExprPtr& f, const ExprPtr& a, NameSupply& supply) {
    if (f->tag == Tag::Lam) return substitute(f->kids[0], f->name, a, supply);
    return app(f, a);
}

}  // namespace probc
