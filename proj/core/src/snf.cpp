#include "probc/snf.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <memory>
#include <vector>

#include "probc/errors.hpp"

namespace probc::snf {

namespace {
constexpr int kMaxIntExponent = 64;
constexpr int kMaxSumUnroll = 32;
constexpr int kMaxDivisionSteps = 400;

// sqrt(p/q) == (r/q) * sqrt(m) with m squarefree-ish: rationalized
// denominator and the largest small square divisor extracted.
void rational_sqrt_parts(const Rational& c, Rational& outside, BigInt& under) {
    BigInt pq = numerator(c) * denominator(c);
    using boost::multiprecision::sqrt;
    BigInt root = sqrt(pq);
    if (root * root == pq) {
        outside = Rational(root, denominator(c));
        under = 1;
        return;
    }
    BigInt r = 1;
    for (BigInt d = 2; d * d <= pq && d <= 1000; ++d) {
        while (pq % (d * d) == 0) {
            pq /= d * d;
            r *= d;
        }
    }
    outside = Rational(r, denominator(c));
    under = pq;
}

Rational factorial(int n) {
    Rational r(1);
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}
}  // namespace

struct Engine::Impl {
    NameSupply& supply;
    Facts& facts;
    ChildCanon child_canon;

    // ---- atoms ----
    enum class AK { Var, Pi, Sqrt, PowSym, Ind, Eq, Opaque };

    struct SnfT;
    using SnfP = std::shared_ptr<const SnfT>;

    struct Atom {
        AK kind;
        std::string key;
        ExprPtr a;       // Var node / Ind cond / Eq lhs / Opaque expr / Sqrt+PowSym rendered base
        ExprPtr b;       // Eq rhs / PowSym rendered exponent
        SnfP payload;    // Sqrt inner / PowSym base
        SnfP payload2;   // PowSym exponent
    };
    std::vector<Atom> atoms;
    std::map<std::string, int> atom_ids;

    // ---- terms and polynomials ----
    struct Mono {
        std::vector<std::pair<int, int>> f;  // (atom id, exponent > 0), sorted by atom key
    };
    struct Term {
        Rational coef;
        Mono mono;
        SnfP earg;        // exponent of the merged exp factor, null if none
        std::string ekey;  // cached key of earg
    };
    struct Poly {
        std::vector<Term> t;  // canonically sorted, merged, no zero coefs
    };
    struct SnfT {
        Poly num, den;  // den is the constant 1 when trivial
    };
    // Result of a raw polynomial product: terms that need no collapse stay
    // flat; collapsing terms accumulate into `overflow` as a quotient.
    struct PolyProduct {
        Poly flat;
        SnfP overflow;
    };

    SnfP zero_, one_;

    Impl(NameSupply& s, Facts& f, ChildCanon cc)
        : supply(s), facts(f), child_canon(std::move(cc)) {
        zero_ = std::make_shared<SnfT>(SnfT{Poly{}, const_poly(1)});
        one_ = std::make_shared<SnfT>(SnfT{const_poly(1), const_poly(1)});
    }

    // ---- atom helpers ----
    int intern(AK kind, std::string key, ExprPtr a, ExprPtr b = nullptr, SnfP p1 = nullptr,
               SnfP p2 = nullptr) {
        auto it = atom_ids.find(key);
        if (it != atom_ids.end()) return it->second;
        atoms.push_back(Atom{kind, key, std::move(a), std::move(b), std::move(p1), std::move(p2)});
        int id = static_cast<int>(atoms.size()) - 1;
        atom_ids.emplace(atoms.back().key, id);
        return id;
    }
    const std::string& akey(int id) const { return atoms[id].key; }
    bool akey_less(int x, int y) const { return akey(x) < akey(y); }

    // ---- keys (uid-aware, deterministic) ----
    std::string term_key(const Term& t) const {
        std::string k = rational_to_string(t.coef);
        for (auto& [id, e] : t.mono.f) {
            k += '*';
            k += akey(id);
            if (e != 1) {
                k += '^';
                k += std::to_string(e);
            }
        }
        if (t.earg) {
            k += "*exp[";
            k += t.ekey;
            k += ']';
        }
        return k;
    }
    std::string poly_key(const Poly& p) const {
        std::string k;
        for (auto& t : p.t) {
            k += term_key(t);
            k += '+';
        }
        return k;
    }
    std::string snf_key(const SnfP& s) const {
        return poly_key(s->num) + "/" + poly_key(s->den);
    }

    // ---- construction ----
    static Poly const_poly(Rational q) {
        Poly p;
        if (q != 0) p.t.push_back(Term{std::move(q), {}, nullptr, {}});
        return p;
    }
    SnfP from_rational(Rational q) {
        if (q == 0) return zero_;
        return std::make_shared<SnfT>(SnfT{const_poly(std::move(q)), const_poly(1)});
    }

    bool is_zero(const SnfP& s) const { return s->num.t.empty(); }
    bool is_one(const SnfP& s) const {
        return s->num.t.size() == 1 && s->den.t.size() == 1 && term_is_const(s->num.t[0]) &&
               term_is_const(s->den.t[0]) && s->num.t[0].coef == s->den.t[0].coef;
    }
    static bool term_is_const(const Term& t) { return t.mono.f.empty() && !t.earg; }
    std::optional<Rational> constant_of(const SnfP& s) const {
        if (is_zero(s)) return Rational(0);
        if (s->num.t.size() == 1 && s->den.t.size() == 1 && term_is_const(s->num.t[0]) &&
            term_is_const(s->den.t[0])) {
            return s->num.t[0].coef / s->den.t[0].coef;
        }
        return std::nullopt;
    }

    // ---- term ordering and poly canonicalization ----
    int mono_cmp(const Mono& a, const Mono& b) const {
        std::size_t n = std::min(a.f.size(), b.f.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (a.f[i].first != b.f[i].first) {
                return akey_less(a.f[i].first, b.f[i].first) ? -1 : 1;
            }
            if (a.f[i].second != b.f[i].second) return a.f[i].second > b.f[i].second ? -1 : 1;
        }
        if (a.f.size() != b.f.size()) return a.f.size() > b.f.size() ? -1 : 1;
        return 0;
    }
    int term_cmp(const Term& a, const Term& b) const {
        int c = mono_cmp(a.mono, b.mono);
        if (c) return c;
        if (a.ekey != b.ekey) return a.ekey < b.ekey ? -1 : 1;
        return 0;
    }
    int term_cmp_no_coef(const Term& a, const Term& b) const { return term_cmp(a, b); }

    Poly canon_poly(std::vector<Term> ts) const {
        std::sort(ts.begin(), ts.end(), [&](const Term& a, const Term& b) {
            return term_cmp(a, b) < 0;
        });
        Poly out;
        for (auto& t : ts) {
            if (t.coef == 0) continue;
            if (!out.t.empty() && term_cmp(out.t.back(), t) == 0) {
                out.t.back().coef += t.coef;
                if (out.t.back().coef == 0) out.t.pop_back();
            } else {
                out.t.push_back(std::move(t));
            }
        }
        return out;
    }

    Poly poly_add(const Poly& a, const Poly& b) const {
        std::vector<Term> ts = a.t;
        ts.insert(ts.end(), b.t.begin(), b.t.end());
        return canon_poly(std::move(ts));
    }

    // ---- arithmetic on quotients ----
    SnfP s_add(const SnfP& a, const SnfP& b) {
        if (is_zero(a)) return b;
        if (is_zero(b)) return a;
        if (poly_key(a->den) == poly_key(b->den)) {
            return norm_quot(poly_add(a->num, b->num), a->den);
        }
        PolyProduct px = poly_mul_raw(a->num, b->den);
        PolyProduct py = poly_mul_raw(b->num, a->den);
        PolyProduct pd = poly_mul_raw(a->den, b->den);
        if (!px.overflow && !py.overflow && !pd.overflow) {
            return norm_quot(poly_add(px.flat, py.flat), pd.flat);
        }
        SnfP x = px.overflow ? s_add(flat_snf(std::move(px.flat)), px.overflow)
                             : flat_snf(std::move(px.flat));
        SnfP y = py.overflow ? s_add(flat_snf(std::move(py.flat)), py.overflow)
                             : flat_snf(std::move(py.flat));
        SnfP d = pd.overflow ? s_add(flat_snf(std::move(pd.flat)), pd.overflow)
                             : flat_snf(std::move(pd.flat));
        return s_div(s_add(x, y), d);
    }
    SnfP s_neg(const SnfP& a) {
        std::vector<Term> ts = a->num.t;
        for (auto& t : ts) t.coef = -t.coef;
        return std::make_shared<SnfT>(SnfT{canon_poly(std::move(ts)), a->den});
    }
    SnfP s_sub(const SnfP& a, const SnfP& b) { return s_add(a, s_neg(b)); }
    static bool den_is_one(const SnfP& s) {
        return s->den.t.size() == 1 && term_is_const(s->den.t[0]) && s->den.t[0].coef == 1;
    }
    SnfP combine(PolyProduct p) {
        SnfP flat = flat_snf(std::move(p.flat));
        return p.overflow ? s_add(flat, p.overflow) : flat;
    }
    SnfP s_mul(const SnfP& a, const SnfP& b) {
        if (is_zero(a) || is_zero(b)) return zero_;
        if (is_one(a)) return b;
        if (is_one(b)) return a;
        PolyProduct n = poly_mul_raw(a->num, b->num);
        PolyProduct d = poly_mul_raw(a->den, b->den);
        if (!n.overflow && !d.overflow) {
            return norm_quot(std::move(n.flat), std::move(d.flat));
        }
        return s_div(combine(std::move(n)), combine(std::move(d)));
    }
    SnfP flat_snf(Poly p) {
        return norm_quot(std::move(p), const_poly(1));
    }
    SnfP s_inv(const SnfP& a) {
        if (is_zero(a)) {
            // Division by syntactic zero: freeze as an opaque subterm.
            ExprPtr e = div(lit(1), lit(0));
            return atom_snf(intern(AK::Opaque, internal_key(e), e));
        }
        return norm_quot(a->den, a->num);
    }
    // Quotients flatten level by level; the fuel bound defends against
    // collapse loops, freezing the value as an opaque division worst case.
    SnfP s_div(SnfP a, SnfP b) {
        for (int fuel = 0; fuel < 16; ++fuel) {
            if (is_one(b)) return a;
            if (is_zero(a)) return a;
            if (is_zero(b)) return s_mul(a, s_inv(b));  // opaque 1/0
            if (den_is_one(a) && den_is_one(b)) return norm_quot(a->num, b->num);
            // (an/ad) / (bn/bd) == (an*bd) / (ad*bn)
            SnfP num = combine(poly_mul_raw(a->num, b->den));
            SnfP den = combine(poly_mul_raw(a->den, b->num));
            a = num;
            b = den;
        }
        ExprPtr frozen = div(render(a), render(b));
        return atom_snf(intern(AK::Opaque, internal_key(frozen), frozen));
    }
    SnfP s_pow_int(const SnfP& a, long k) {
        if (k == 0) return one_;
        SnfP base = k > 0 ? a : s_inv(a);
        long n = k > 0 ? k : -k;
        SnfP acc = one_;
        while (n > 0) {
            if (n & 1) acc = s_mul(acc, base);
            base = n > 1 ? s_mul(base, base) : base;
            n >>= 1;
        }
        return acc;
    }
    SnfP s_exp(const SnfP& arg) {
        if (is_zero(arg)) return one_;
        Term t{Rational(1), {}, arg, snf_key(arg)};
        return std::make_shared<SnfT>(SnfT{Poly{{t}}, const_poly(1)});
    }
    SnfP atom_snf(int id, int exp = 1) {
        Term t{Rational(1), Mono{{{id, exp}}}, nullptr, {}};
        return std::make_shared<SnfT>(SnfT{Poly{{t}}, const_poly(1)});
    }

    // Product of two polys. Terms that need no collapse stay flat; the
    // rare collapsing terms accumulate into `overflow` as a quotient.
    PolyProduct poly_mul_raw(const Poly& a, const Poly& b) {
        PolyProduct out;
        std::vector<Term> flat;
        for (const auto& ta : a.t) {
            for (const auto& tb : b.t) {
                Term t = raw_mul(ta, tb);
                if (ta.earg && tb.earg) {
                    SnfP merged = s_add(ta.earg, tb.earg);
                    if (is_zero(merged)) {
                        t.earg = nullptr;
                        t.ekey.clear();
                    } else {
                        t.earg = merged;
                        t.ekey = snf_key(merged);
                    }
                }
                if (needs_collapse(t)) {
                    SnfP c = term_to_snf(std::move(t));
                    out.overflow = out.overflow ? s_add(out.overflow, c) : c;
                } else {
                    flat.push_back(std::move(t));
                }
            }
        }
        out.flat = canon_poly(std::move(flat));
        return out;
    }

    bool needs_collapse(const Term& t) const {
        std::set<std::string> powsym_bases;
        std::vector<std::string> eq_targets;  // replaced side of each Eq
        for (auto& [id, e] : t.mono.f) {
            const Atom& a = atoms[id];
            switch (a.kind) {
                case AK::Ind:
                    if (e > 1 || is_bool_true(a.a) || is_bool_false(a.a)) return true;
                    break;
                case AK::Eq:
                    if (exprs_identical(a.a, a.b)) return true;
                    eq_targets.push_back(internal_key(a.b));
                    break;
                case AK::Sqrt:
                    if (e >= 2) return true;
                    break;
                case AK::PowSym: {
                    std::string base = a.key.substr(0, a.key.find("}^{"));
                    if (!powsym_bases.insert(base).second) return true;
                    auto cv = constant_of(a.payload2);
                    if (cv && is_integer(*cv) && abs(*cv) <= kMaxIntExponent) return true;
                    break;
                }
                default: break;
            }
        }
        // Equality guidance only matters when the replaced side occurs in
        // another factor; keys nest compositionally so a substring check
        // soundly over-approximates occurrence.
        if (!eq_targets.empty()) {
            for (auto& [id, e] : t.mono.f) {
                (void)e;
                const Atom& a = atoms[id];
                if (a.kind == AK::Eq) continue;
                for (const auto& bk : eq_targets) {
                    if (a.key.find(bk) != std::string::npos) return true;
                }
            }
            for (const auto& bk : eq_targets) {
                if (t.ekey.find(bk) != std::string::npos) return true;
            }
        }
        // Contradictory half-line indicators.
        std::set<std::string> pos;
        for (auto& [id, e] : t.mono.f) {
            (void)e;
            const Atom& a = atoms[id];
            if (a.kind == AK::Ind && a.a->tag == Tag::Less && is_lit(a.a->kids[0], Rational(0))) {
                pos.insert(internal_key(a.a->kids[1]));
            }
        }
        if (pos.size() >= 2) return true;  // conservatively recheck
        return false;
    }

    // Monomial and coefficient product; exp factors merge only when one
    // side carries one (mul_pp handles the both-sides case).
    Term raw_mul(const Term& a, const Term& b) const {
        Term out;
        out.coef = a.coef * b.coef;
        std::size_t i = 0, j = 0;
        while (i < a.mono.f.size() || j < b.mono.f.size()) {
            if (j == b.mono.f.size() ||
                (i < a.mono.f.size() && akey_less(a.mono.f[i].first, b.mono.f[j].first))) {
                out.mono.f.push_back(a.mono.f[i++]);
            } else if (i == a.mono.f.size() || akey_less(b.mono.f[j].first, a.mono.f[i].first)) {
                out.mono.f.push_back(b.mono.f[j++]);
            } else {
                out.mono.f.push_back({a.mono.f[i].first, a.mono.f[i].second + b.mono.f[j].second});
                ++i;
                ++j;
            }
        }
        out.earg = a.earg ? a.earg : b.earg;
        out.ekey = a.earg ? a.ekey : b.ekey;
        return out;
    }

    // Collapse pass: exponent merging, idempotent indicators, equality
    // guidance, sqrt pairs, integer symbolic powers.
    SnfP term_to_snf(Term t) {
        if (t.coef == 0) return zero_;

        std::vector<std::pair<SnfP, long>> extras;
        std::vector<std::pair<int, int>> keep;
        // Detect contradictory indicator pairs Ind(0 < d), Ind(0 < -d).
        std::set<std::string> ind_pos_keys;
        for (auto& [id, e] : t.mono.f) {
            const Atom& a = atoms[id];
            if (a.kind == AK::Ind && a.a->tag == Tag::Less && is_lit(a.a->kids[0], Rational(0))) {
                ind_pos_keys.insert(internal_key(a.a->kids[1]));
            }
        }
        // Same-base symbolic powers merge by adding their exponents.
        struct PowGroup {
            SnfP base;
            SnfP exponent;
        };
        std::map<std::string, PowGroup> pows;
        bool substituted = false;
        for (auto& [id, e] : t.mono.f) {
            Atom a = atoms[id];
            int exp = e;
            switch (a.kind) {
                case AK::Ind: {
                    if (is_bool_true(a.a)) continue;
                    if (is_bool_false(a.a)) return zero_;
                    if (a.a->tag == Tag::Less && is_lit(a.a->kids[0], Rational(0))) {
                        ExprPtr mirrored = canon_scalar_cached(neg(a.a->kids[1]));
                        if (ind_pos_keys.count(internal_key(mirrored))) return zero_;
                    }
                    keep.push_back({id, 1});  // idempotent
                    break;
                }
                case AK::Eq: {
                    if (exprs_identical(a.a, a.b)) continue;  // Eq(x,x) == 1
                    keep.push_back({id, 1});
                    substituted = true;  // mark for the guidance pass below
                    break;
                }
                case AK::Sqrt: {
                    if (exp >= 2) {
                        extras.push_back({a.payload, exp / 2});
                        if (exp % 2) keep.push_back({id, 1});
                    } else {
                        keep.push_back({id, exp});
                    }
                    break;
                }
                case AK::PowSym: {
                    std::string base_key = snf_key(a.payload);
                    SnfP contrib = s_mul(a.payload2, from_rational(Rational(exp)));
                    auto it = pows.find(base_key);
                    if (it == pows.end()) {
                        pows.emplace(base_key, PowGroup{a.payload, contrib});
                    } else {
                        it->second.exponent = s_add(it->second.exponent, contrib);
                    }
                    break;
                }
                default: keep.push_back({id, exp}); break;
            }
        }
        for (auto& [bk, g] : pows) {
            (void)bk;
            if (is_zero(g.exponent)) continue;
            auto cv = constant_of(g.exponent);
            if (cv && is_integer(*cv) && abs(*cv) <= kMaxIntExponent) {
                extras.push_back({g.base, static_cast<long>(numerator(*cv).convert_to<long long>())});
                continue;
            }
            ExprPtr rb = render(g.base), re = render(g.exponent);
            std::string key = "pow{" + snf_key(g.base) + "}^{" + snf_key(g.exponent) + "}";
            keep.push_back({intern(AK::PowSym, key, rb, re, g.base, g.exponent), 1});
        }
        std::sort(keep.begin(), keep.end(), [&](const auto& x, const auto& y) {
            return akey_less(x.first, y.first);
        });
        t.mono.f = std::move(keep);

        SnfP subst_factor = substituted ? apply_eq_guidance(t) : one_;

        SnfP out = std::make_shared<SnfT>(SnfT{Poly{{t}}, const_poly(1)});
        for (auto& [base, k] : extras) out = s_mul(out, s_pow_int(base, k));
        if (!is_one(subst_factor)) out = s_mul(out, subst_factor);
        return out;
    }

    // Within a term, Eq(a,b) licenses replacing b by a in every other
    // factor: 1[a=b]*F(b) == 1[a=b]*F(a). Returns the re-normalized
    // multiplier for the factors that changed.
    SnfP apply_eq_guidance(Term& t) {
        std::vector<std::pair<ExprPtr, ExprPtr>> rules;  // replace .first by .second
        for (auto& [id, e] : t.mono.f) {
            const Atom& a = atoms[id];
            if (a.kind == AK::Eq) rules.push_back({a.b, a.a});
        }
        if (rules.empty()) return one_;
        SnfP factor = one_;
        std::vector<std::pair<int, int>> out;
        for (auto& [id, e] : t.mono.f) {
            Atom a = atoms[id];  // copy: interning below may reallocate
            if (a.kind == AK::Eq) {
                out.push_back({id, e});
                continue;
            }
            ExprPtr rendered = atom_expr(id);
            ExprPtr replaced = rendered;
            for (auto& [from, to] : rules) replaced = replace_subterm(replaced, from, to);
            if (replaced != rendered) {
                factor = s_mul(factor, s_pow_int(to_snf(replaced), e));
            } else {
                out.push_back({id, e});
            }
        }
        if (t.earg) {
            ExprPtr rendered = render(t.earg);
            ExprPtr replaced = rendered;
            for (auto& [from, to] : rules) replaced = replace_subterm(replaced, from, to);
            if (replaced != rendered) {
                SnfP ne = to_snf(replaced);
                t.earg = is_zero(ne) ? nullptr : ne;
                t.ekey = t.earg ? snf_key(t.earg) : "";
            }
        }
        t.mono.f = std::move(out);
        return factor;
    }

    // ---- quotient normalization ----
    SnfP norm_quot(Poly num, Poly den) {
        num = canon_poly(std::move(num.t));
        den = canon_poly(std::move(den.t));
        if (num.t.empty()) return zero_;
        if (den.t.empty()) {
            ExprPtr e = div(render_poly(num), lit(0));
            return atom_snf(intern(AK::Opaque, internal_key(e), e));
        }

        // Shift the merged exp factor so the denominator's leading term is
        // exp-free: multiply both sides by exp(-E0).
        if (den.t.front().earg) {
            SnfP e0 = den.t.front().earg;
            auto shift = [&](Poly& p) {
                for (auto& t : p.t) {
                    SnfP ne = t.earg ? s_sub(t.earg, e0) : s_neg(e0);
                    if (is_zero(ne)) {
                        t.earg = nullptr;
                        t.ekey.clear();
                    } else {
                        t.earg = ne;
                        t.ekey = snf_key(ne);
                    }
                }
            };
            shift(num);
            shift(den);
            num = canon_poly(std::move(num.t));
            den = canon_poly(std::move(den.t));
        }

        // Cancel the common per-atom exponent across every term.
        std::map<int, int> common;
        auto gather = [&](const Poly& p, bool first_poly) {
            for (std::size_t ti = 0; ti < p.t.size(); ++ti) {
                std::map<int, int> here;
                for (auto& [id, e] : p.t[ti].mono.f) here[id] = e;
                if (first_poly && ti == 0) {
                    common = here;
                } else {
                    for (auto it = common.begin(); it != common.end();) {
                        auto h = here.find(it->first);
                        if (h == here.end()) {
                            it = common.erase(it);
                        } else {
                            it->second = std::min(it->second, h->second);
                            ++it;
                        }
                    }
                }
            }
        };
        gather(num, true);
        gather(den, false);
        if (!common.empty()) {
            auto strip = [&](Poly& p) {
                for (auto& t : p.t) {
                    std::vector<std::pair<int, int>> f;
                    for (auto& [id, e] : t.mono.f) {
                        auto c = common.find(id);
                        int ne = c == common.end() ? e : e - c->second;
                        if (ne > 0) f.push_back({id, ne});
                    }
                    t.mono.f = std::move(f);
                }
            };
            strip(num);
            strip(den);
            num = canon_poly(std::move(num.t));
            den = canon_poly(std::move(den.t));
        }

        // Scale so the denominator's leading coefficient is 1.
        Rational scale = den.t.front().coef;
        if (scale != 1) {
            for (auto& t : num.t) t.coef /= scale;
            for (auto& t : den.t) t.coef /= scale;
        }

        // num == c * den collapses to the constant (covers exp-carrying
        // polys that the gcd below skips).
        if (num.t.size() == den.t.size() && den.t.size() >= 1) {
            Rational c = num.t.front().coef / den.t.front().coef;
            bool multiple = true;
            for (std::size_t i = 0; i < num.t.size() && multiple; ++i) {
                multiple = term_cmp_no_coef(num.t[i], den.t[i]) == 0 &&
                           num.t[i].coef == c * den.t[i].coef;
            }
            if (multiple) return from_rational(c);
        }

        // Cancel the polynomial gcd of numerator and denominator; exp
        // factors on numerator terms group out first.
        if (!(den.t.size() == 1 && term_is_const(den.t[0])) && !poly_has_exp(den)) {
            Poly g = poly_has_exp(num) ? gcd_vs_den(num, den) : poly_gcd(num, den);
            if (!poly_is_const(g)) {
                num = poly_has_exp(num) ? divide_groups(num, g) : exact_divide_or_self(num, g);
                den = exact_divide_or_self(den, g);
                Rational rescale = den.t.empty() ? Rational(1) : den.t.front().coef;
                if (rescale != 1 && rescale != 0) {
                    for (auto& t : num.t) t.coef /= rescale;
                    for (auto& t : den.t) t.coef /= rescale;
                }
            }
        }

        // Rationalize: a single-term denominator sheds its square roots,
        // so 1/sqrt(2) and sqrt(1/2) share one canonical form sqrt(2)/2.
        if (den.t.size() == 1) {
            Term mult{Rational(1), {}, nullptr, {}};
            for (auto& [id, e] : den.t[0].mono.f) {
                if (atoms[id].kind == AK::Sqrt) mult.mono.f.push_back({id, e});
            }
            if (!mult.mono.f.empty()) {
                Term den2 = raw_mul(den.t[0], mult);
                SnfP dens = term_to_snf(std::move(den2));  // sqrt pairs collapse
                PolyProduct nums = poly_mul_raw(num, Poly{{mult}});
                SnfP numv = nums.overflow ? s_add(flat_snf(std::move(nums.flat)), nums.overflow)
                                          : flat_snf(std::move(nums.flat));
                return s_div(numv, dens);
            }
        }
        return std::make_shared<SnfT>(SnfT{std::move(num), std::move(den)});
    }

    // ---- polynomial gcd (for quotient cancellation) ----
    std::optional<Poly> poly_mul_flat(const Poly& a, const Poly& b) {
        PolyProduct r = poly_mul_raw(a, b);
        if (r.overflow) return std::nullopt;
        return r.flat;
    }

    int poly_deg_in(const Poly& p, int x) const {
        int d = 0;
        for (const auto& t : p.t) {
            for (auto& [id, e] : t.mono.f) {
                if (id == x) d = std::max(d, e);
            }
        }
        return d;
    }

    Poly coeff_of_deg(const Poly& p, int x, int deg) const {
        std::vector<Term> ts;
        for (const auto& t : p.t) {
            int d = 0;
            Term stripped{t.coef, {}, t.earg, t.ekey};
            for (auto& [id, e] : t.mono.f) {
                if (id == x) d = e;
                else stripped.mono.f.push_back({id, e});
            }
            if (d == deg) ts.push_back(std::move(stripped));
        }
        return canon_poly(std::move(ts));
    }

    Poly shift_pow(const Poly& p, int x, int k) const {
        if (k == 0) return p;
        std::vector<Term> ts;
        for (const auto& t : p.t) {
            Term nt = t;
            bool placed = false;
            std::vector<std::pair<int, int>> f;
            for (auto& [id, e] : nt.mono.f) {
                if (id == x) {
                    f.push_back({id, e + k});
                    placed = true;
                } else if (!placed && akey_less(x, id)) {
                    f.push_back({x, k});
                    placed = true;
                    f.push_back({id, e});
                } else {
                    f.push_back({id, e});
                }
            }
            if (!placed) f.push_back({x, k});
            std::sort(f.begin(), f.end(),
                      [&](const auto& a, const auto& b) { return akey_less(a.first, b.first); });
            nt.mono.f = std::move(f);
            ts.push_back(std::move(nt));
        }
        return canon_poly(std::move(ts));
    }

    static bool poly_is_const(const Poly& p) {
        return p.t.empty() || (p.t.size() == 1 && term_is_const(p.t[0]));
    }
    static bool poly_has_exp(const Poly& p) {
        for (const auto& t : p.t) {
            if (t.earg) return true;
        }
        return false;
    }

    // Pseudo-remainder of a by b in the main atom x.
    std::optional<Poly> prem(Poly a, const Poly& b, int x) {
        int db = poly_deg_in(b, x);
        Poly lcb = coeff_of_deg(b, x, db);
        int guard = poly_deg_in(a, x) - db + 2;
        while (!a.t.empty() && poly_deg_in(a, x) >= db) {
            if (--guard < 0 || a.t.size() > 200) return std::nullopt;
            int da = poly_deg_in(a, x);
            Poly lca = coeff_of_deg(a, x, da);
            auto left = poly_mul_flat(a, lcb);
            auto sub1 = poly_mul_flat(shift_pow(lca, x, da - db), b);
            if (!left || !sub1) return std::nullopt;
            for (auto& t : sub1->t) t.coef = -t.coef;
            a = poly_add(*left, *sub1);
        }
        return a;
    }

    // Primitive-Euclidean multivariate gcd; returns 1 whenever the
    // computation would be expensive or is not applicable.
    Poly poly_gcd(const Poly& a, const Poly& b, int depth = 0) {
        Poly one = const_poly(1);
        if (depth > 5 || a.t.size() > 60 || b.t.size() > 60) return one;
        if (poly_has_exp(a) || poly_has_exp(b)) return one;
        if (a.t.empty()) return b;
        if (b.t.empty()) return a;
        if (poly_is_const(a) || poly_is_const(b)) return one;
        if (poly_key(a) == poly_key(b)) return a;

        // Pick a main atom common to both.
        std::set<int> in_a;
        for (const auto& t : a.t) {
            for (auto& [id, e] : t.mono.f) {
                (void)e;
                in_a.insert(id);
            }
        }
        int x = -1;
        for (const auto& t : b.t) {
            for (auto& [id, e] : t.mono.f) {
                (void)e;
                if (in_a.count(id)) {
                    if (x < 0 || akey_less(id, x)) x = id;
                }
            }
        }
        if (x < 0) return one;

        // Contents and primitive parts with respect to x.
        auto content = [&](const Poly& p) {
            Poly g;
            int d = poly_deg_in(p, x);
            for (int k = 0; k <= d; ++k) {
                Poly c = coeff_of_deg(p, x, k);
                if (c.t.empty()) continue;
                g = g.t.empty() ? c : poly_gcd(g, c, depth + 1);
                if (poly_is_const(g)) return const_poly(1);
            }
            return g.t.empty() ? const_poly(1) : g;
        };
        Poly ca = content(a), cb = content(b);
        auto pa = exact_divide_or_self(a, ca);
        auto pb = exact_divide_or_self(b, cb);
        Poly cg = poly_gcd(ca, cb, depth + 1);

        Poly A = pa, B = pb;
        if (poly_deg_in(A, x) < poly_deg_in(B, x)) std::swap(A, B);
        for (int iter = 0; iter < 12; ++iter) {
            if (B.t.empty()) break;
            if (poly_is_const(B)) {
                B = const_poly(1);
                break;
            }
            auto r = prem(A, B, x);
            if (!r) return one;
            A = B;
            Poly pr = *r;
            Poly cr = content(pr);
            B = exact_divide_or_self(pr, cr);
            // Normalize the rational scale for stability.
            if (!B.t.empty() && B.t.front().coef != 1) {
                Rational s = B.t.front().coef;
                for (auto& t : B.t) t.coef /= s;
            }
        }
        Poly g = B.t.empty() ? A : B;
        if (poly_is_const(g)) return cg;
        auto gl = poly_mul_flat(cg, g);
        if (!gl) return one;
        // Confirm divisibility (pseudo-division gcds can pick up units).
        if (!exact_divide(a, *gl) || !exact_divide(b, *gl)) return one;
        return *gl;
    }

    Poly exact_divide_or_self(const Poly& p, const Poly& d) {
        if (poly_is_const(d)) {
            if (d.t.empty()) return p;
            Poly out = p;
            Rational s = d.t[0].coef;
            for (auto& t : out.t) t.coef /= s;
            return out;
        }
        auto q = exact_divide(p, d);
        return q ? *q : p;
    }

    // Terms grouped by their exp factor, exp stripped.
    std::vector<std::pair<Term, Poly>> exp_groups(const Poly& p) const {
        std::map<std::string, std::pair<Term, Poly>> groups;
        for (const auto& t : p.t) {
            auto& slot = groups[t.ekey];
            slot.first = Term{Rational(1), {}, t.earg, t.ekey};
            slot.second.t.push_back(Term{t.coef, t.mono, nullptr, {}});
        }
        std::vector<std::pair<Term, Poly>> out;
        for (auto& [k, v] : groups) {
            (void)k;
            v.second = canon_poly(std::move(v.second.t));
            out.push_back(std::move(v));
        }
        return out;
    }

    // gcd of an exp-carrying numerator against an exp-free denominator:
    // every exp group must be divisible.
    Poly gcd_vs_den(const Poly& num, const Poly& den) {
        Poly g = den;
        for (const auto& [carrier, group] : exp_groups(num)) {
            (void)carrier;
            g = poly_gcd(group, g);
            if (poly_is_const(g)) return const_poly(1);
        }
        return g;
    }

    Poly divide_groups(const Poly& p, const Poly& g) {
        std::vector<Term> out;
        for (auto& [carrier, group] : exp_groups(p)) {
            Poly q = exact_divide_or_self(group, g);
            for (auto& t : q.t) {
                Term nt = t;
                nt.earg = carrier.earg;
                nt.ekey = carrier.ekey;
                out.push_back(std::move(nt));
            }
        }
        return canon_poly(std::move(out));
    }

    // Classical multivariate exact division; exp-carrying polys are skipped.
    std::optional<Poly> exact_divide(const Poly& p, const Poly& d) const {
        if (d.t.empty()) return std::nullopt;
        if (d.t.size() == 1 && term_is_const(d.t[0])) return std::nullopt;  // content handled
        for (const auto& t : p.t) {
            if (t.earg) return std::nullopt;
        }
        for (const auto& t : d.t) {
            if (t.earg) return std::nullopt;
        }
        Poly rem = p;
        std::vector<Term> q;
        const Term& dl = d.t.front();
        int steps = 0;
        while (!rem.t.empty()) {
            if (++steps > kMaxDivisionSteps) return std::nullopt;
            const Term& rl = rem.t.front();
            // divide rl by dl
            std::vector<std::pair<int, int>> f;
            std::size_t i = 0, j = 0;
            bool ok = true;
            while (j < dl.mono.f.size() && ok) {
                if (i >= rl.mono.f.size()) {
                    ok = false;
                    break;
                }
                if (rl.mono.f[i].first == dl.mono.f[j].first) {
                    int ne = rl.mono.f[i].second - dl.mono.f[j].second;
                    if (ne < 0) {
                        ok = false;
                        break;
                    }
                    if (ne > 0) f.push_back({rl.mono.f[i].first, ne});
                    ++i;
                    ++j;
                } else if (akey_less(rl.mono.f[i].first, dl.mono.f[j].first)) {
                    f.push_back(rl.mono.f[i]);
                    ++i;
                } else {
                    ok = false;
                    break;
                }
            }
            if (!ok) return std::nullopt;
            for (; i < rl.mono.f.size(); ++i) f.push_back(rl.mono.f[i]);
            Term qt{rl.coef / dl.coef, Mono{std::move(f)}, nullptr, {}};
            // rem -= qt * d
            std::vector<Term> sub;
            sub.reserve(d.t.size());
            for (const auto& dt : d.t) {
                Term m = raw_mul(qt, dt);
                m.coef = -m.coef;
                sub.push_back(std::move(m));
            }
            rem = poly_add(rem, Poly{std::move(sub)});
            q.push_back(std::move(qt));
        }
        return canon_poly(std::move(q));
    }

    // ---- signs ----
    std::string atom_fact_key(int id) { return snf_key(atom_snf(id)); }
    Sign atom_sign(int id) {
        const Atom& a = atoms[id];
        switch (a.kind) {
            case AK::Pi: return Sign::Positive;
            case AK::Var:
            case AK::Opaque:
                return facts.has(atom_fact_key(id)) ? Sign::Positive : Sign::Unknown;
            case AK::Sqrt: {
                Sign inner = snf_sign(a.payload);
                return inner == Sign::Positive ? Sign::Positive : Sign::NonNegative;
            }
            case AK::PowSym: return snf_sign(a.payload) == Sign::Positive ? Sign::Positive : Sign::Unknown;
            case AK::Ind:
            case AK::Eq: return Sign::NonNegative;
        }
        return Sign::Unknown;
    }
    Sign term_sign(const Term& t) {
        if (t.coef < 0) return Sign::Unknown;
        Sign s = Sign::Positive;
        for (auto& [id, e] : t.mono.f) {
            Sign as = atom_sign(id);
            if (e % 2 == 0) {
                if (as != Sign::Positive) as = Sign::NonNegative;
            }
            if (as == Sign::Unknown) return Sign::Unknown;
            if (as == Sign::NonNegative && s == Sign::Positive) s = Sign::NonNegative;
        }
        return s;  // exp factor is strictly positive
    }
    Sign poly_sign(const Poly& p) {
        if (p.t.empty()) return Sign::NonNegative;
        bool any_pos = false, all_known = true;
        for (auto& t : p.t) {
            Sign s = term_sign(t);
            if (s == Sign::Unknown) {
                all_known = false;
                break;
            }
            if (s == Sign::Positive) any_pos = true;
        }
        if (all_known) return any_pos ? Sign::Positive : Sign::NonNegative;
        return facts.has(poly_fact_key(p)) ? Sign::Positive : Sign::Unknown;
    }
    std::string poly_fact_key(const Poly& p) const { return poly_key(p); }
    Sign snf_sign(const SnfP& s) {
        Sign n = poly_sign(s->num), d = poly_sign(s->den);
        if (n == Sign::Unknown || d == Sign::Unknown) {
            return facts.has(snf_key(s)) ? Sign::Positive : Sign::Unknown;
        }
        if (n == Sign::Positive && d == Sign::Positive) return Sign::Positive;
        return Sign::NonNegative;
    }

    // ---- sqrt ----
    SnfP s_sqrt(const SnfP& s) {
        if (is_zero(s)) return zero_;
        SnfP rn = sqrt_poly(s->num);
        SnfP rd = sqrt_poly(s->den);
        return s_div(rn, rd);
    }
    SnfP sqrt_poly(const Poly& p) {
        if (p.t.size() != 1) return sqrt_atom_of(std::make_shared<SnfT>(SnfT{p, const_poly(1)}));
        const Term& t = p.t[0];
        if (t.coef < 0) {
            return sqrt_atom_of(std::make_shared<SnfT>(SnfT{p, const_poly(1)}));
        }
        Rational outside;
        BigInt under;
        rational_sqrt_parts(t.coef, outside, under);
        Term out{outside, {}, nullptr, {}};
        Term residue{Rational(under), {}, nullptr, {}};
        for (auto& [id, e] : t.mono.f) {
            Sign as = atom_sign(id);
            bool extractable = as == Sign::Positive || as == Sign::NonNegative;
            if (e >= 2 && extractable) {
                out.mono.f.push_back({id, e / 2});
                if (e % 2) residue.mono.f.push_back({id, 1});
            } else {
                residue.mono.f.push_back({id, e});
            }
        }
        SnfP res;
        if (t.earg) {
            SnfP half = s_mul(t.earg, from_rational(Rational(1, 2)));
            res = s_exp(half);
        } else {
            res = one_;
        }
        SnfP lead = std::make_shared<SnfT>(SnfT{Poly{{out}}, const_poly(1)});
        if (!(residue.coef == 1 && residue.mono.f.empty())) {
            SnfP inner = std::make_shared<SnfT>(SnfT{Poly{{residue}}, const_poly(1)});
            res = s_mul(res, sqrt_atom_of(inner));
        }
        return s_mul(lead, res);
    }
    SnfP sqrt_atom_of(const SnfP& inner) {
        ExprPtr rendered = render(inner);
        std::string key = "sqrt{" + snf_key(inner) + "}";
        return atom_snf(intern(AK::Sqrt, key, rendered, nullptr, inner));
    }

    // ---- conversion Expr -> Snf ----
    SnfP to_snf(const ExprPtr& e) {
        switch (e->tag) {
            case Tag::Lit: return from_rational(e->lit);
            case Tag::Const:
                if (e->sym == SymConst::Pi) {
                    return atom_snf(intern(AK::Pi, "pi", constant(SymConst::Pi)));
                }
                return s_exp(one_);  // e == exp(1)
            case Tag::Var:
                return atom_snf(intern(AK::Var, internal_key(e), e));
            case Tag::Neg: return s_neg(to_snf(e->kids[0]));
            case Tag::Add: return s_add(to_snf(e->kids[0]), to_snf(e->kids[1]));
            case Tag::Sub: return s_sub(to_snf(e->kids[0]), to_snf(e->kids[1]));
            case Tag::Mul: return s_mul(to_snf(e->kids[0]), to_snf(e->kids[1]));
            case Tag::Div: return s_div(to_snf(e->kids[0]), to_snf(e->kids[1]));
            case Tag::Pow: {
                SnfP ex = to_snf(e->kids[1]);
                auto cv = constant_of(ex);
                if (cv && is_integer(*cv) && abs(*cv) <= kMaxIntExponent) {
                    long k = static_cast<long>(numerator(*cv).convert_to<long long>());
                    return s_pow_int(to_snf(e->kids[0]), k);
                }
                SnfP base = to_snf(e->kids[0]);
                ExprPtr rb = render(base), re = render(ex);
                std::string key = "pow{" + snf_key(base) + "}^{" + snf_key(ex) + "}";
                return atom_snf(intern(AK::PowSym, key, rb, re, base, ex));
            }
            case Tag::Exp: {
                SnfP a = to_snf(e->kids[0]);
                // exp(log u) == u for positive u
                if (a->num.t.size() == 1 && a->den.t.size() == 1 && term_is_const(a->den.t[0]) &&
                    a->den.t[0].coef == 1 && !a->num.t[0].earg && a->num.t[0].coef == 1 &&
                    a->num.t[0].mono.f.size() == 1 && a->num.t[0].mono.f[0].second == 1) {
                    const Atom& at = atoms[a->num.t[0].mono.f[0].first];
                    if (at.kind == AK::Opaque && at.a->tag == Tag::Log) {
                        SnfP inner = to_snf(at.a->kids[0]);
                        if (snf_sign(inner) == Sign::Positive) return inner;
                    }
                }
                return s_exp(a);
            }
            case Tag::Log: {
                SnfP a = to_snf(e->kids[0]);
                // log(exp(E)) == E
                if (a->num.t.size() == 1 && a->den.t.size() == 1 && term_is_const(a->den.t[0]) &&
                    a->den.t[0].coef == 1 && a->num.t[0].earg && a->num.t[0].coef == 1 &&
                    a->num.t[0].mono.f.empty()) {
                    return a->num.t[0].earg;
                }
                ExprPtr canon = log(render(a));
                return atom_snf(intern(AK::Opaque, internal_key(canon), canon));
            }
            case Tag::Sqrt: return s_sqrt(to_snf(e->kids[0]));
            case Tag::If: return if_to_snf(e);
            case Tag::Int: return int_to_snf(e);
            case Tag::Sum: return sum_to_snf(e);
            case Tag::Fst:
            case Tag::Snd: {
                ExprPtr arg = child_canon(e->kids[0]);
                if (arg->tag == Tag::Pair) {
                    return to_snf(e->tag == Tag::Fst ? arg->kids[0] : arg->kids[1]);
                }
                ExprPtr canon = e->tag == Tag::Fst ? fst(arg) : snd(arg);
                return atom_snf(intern(AK::Opaque, internal_key(canon), canon));
            }
            case Tag::App: {
                ExprPtr f = child_canon(e->kids[0]);
                if (f->tag == Tag::Lam) {
                    return to_snf(substitute(f->kids[0], f->name, e->kids[1], supply));
                }
                ExprPtr canon = app(f, child_canon(e->kids[1]));
                return atom_snf(intern(AK::Opaque, internal_key(canon), canon));
            }
            default: {
                ExprPtr canon = child_canon(e);
                return atom_snf(intern(AK::Opaque, internal_key(canon), canon));
            }
        }
    }

    // Conjunction chains flatten into one indicator per comparison.
    bool flatten_conds(const ExprPtr& c, std::vector<ExprPtr>& out) {
        if (c->tag == Tag::Less) {
            out.push_back(c);
            return true;
        }
        if (c->tag == Tag::If && is_bool_false(c->kids[2])) {
            return flatten_conds(c->kids[0], out) && flatten_conds(c->kids[1], out);
        }
        return false;
    }

    SnfP if_to_snf(const ExprPtr& e) {
        // Equality indicator: If(a<b, 0, If(b<a, 0, 1)).
        const ExprPtr& c = e->kids[0];
        if (c->tag == Tag::Less && is_lit(e->kids[1], Rational(0)) && e->kids[2]->tag == Tag::If) {
            const ExprPtr& inner = e->kids[2];
            if (inner->kids[0]->tag == Tag::Less && is_lit(inner->kids[1], Rational(0)) &&
                is_lit(inner->kids[2], Rational(1)) &&
                exprs_identical(c->kids[0], inner->kids[0]->kids[1]) &&
                exprs_identical(c->kids[1], inner->kids[0]->kids[0])) {
                ExprPtr a = canon_scalar_cached(c->kids[0]);
                ExprPtr b = canon_scalar_cached(c->kids[1]);
                if (exprs_identical(a, b)) return one_;
                if (internal_key(b) < internal_key(a)) std::swap(a, b);
                std::string key = "eq{" + internal_key(a) + "," + internal_key(b) + "}";
                return atom_snf(intern(AK::Eq, key, a, b));
            }
        }
        ExprPtr cond = canon_bool(c);
        if (is_bool_true(cond)) return to_snf(e->kids[1]);
        if (is_bool_false(cond)) return to_snf(e->kids[2]);
        SnfP no = to_snf(e->kids[2]);
        if (is_zero(no)) {
            std::vector<ExprPtr> conds;
            if (!flatten_conds(cond, conds)) conds = {cond};
            SnfP acc = to_snf(e->kids[1]);
            for (const auto& ci : conds) {
                acc = s_mul(acc, ind_atom(ci));
            }
            return acc;
        }
        ExprPtr canon = if_(cond, canon_scalar_cached(e->kids[1]), canon_scalar_cached(e->kids[2]));
        return atom_snf(intern(AK::Opaque, internal_key(canon), canon));
    }
    SnfP ind_atom(const ExprPtr& cond) {
        if (is_bool_true(cond)) return one_;
        if (is_bool_false(cond)) return zero_;
        return atom_snf(intern(AK::Ind, "ind{" + internal_key(cond) + "}", cond));
    }

    // ---- integration ----
    struct XView {
        // term == rest * x^k * exp(A x^2 + B x + C), with x-free parts
        bool ok = false;
        int k = 0;
        SnfP rest;          // coefficient and x-free atoms, exp factor removed
        SnfP A, B, C;       // null when the exp factor is absent
        bool has_exp = false;
    };

    bool atom_mentions(int id, const Name& x) {
        const Atom& a = atoms[id];
        if (a.a && occurs_free(a.a, x)) return true;
        if (a.b && occurs_free(a.b, x)) return true;
        return false;
    }
    bool poly_mentions(const Poly& p, const Name& x) {
        for (auto& t : p.t) {
            for (auto& [id, e] : t.mono.f) {
                (void)e;
                const Atom& a = atoms[id];
                if (a.kind == AK::Var && a.a->name == x) return true;
                if (atom_mentions(id, x)) return true;
            }
            if (t.earg && snf_mentions(t.earg, x)) return true;
        }
        return false;
    }
    bool snf_mentions(const SnfP& s, const Name& x) {
        return poly_mentions(s->num, x) || poly_mentions(s->den, x);
    }

    XView term_x_view(const Term& t, const Name& x) {
        XView v;
        Term rest{t.coef, {}, nullptr, {}};
        for (auto& [id, e] : t.mono.f) {
            const Atom& a = atoms[id];
            if (a.kind == AK::Var && a.a->name == x) {
                v.k = e;
                continue;
            }
            if (atom_mentions(id, x)) return v;  // not polynomial in x
            rest.mono.f.push_back({id, e});
        }
        if (t.earg) {
            const SnfP& E = t.earg;
            if (poly_mentions(E->den, x)) return v;
            // split E.num by degree in x
            Poly c0, c1, c2;
            for (auto& et : E->num.t) {
                int deg = 0;
                Term stripped{et.coef, {}, et.earg, et.ekey};
                for (auto& [id, e] : et.mono.f) {
                    const Atom& a = atoms[id];
                    if (a.kind == AK::Var && a.a->name == x) {
                        deg = e;
                    } else {
                        if (atom_mentions(id, x)) return v;
                        stripped.mono.f.push_back({id, e});
                    }
                }
                if (stripped.earg && snf_mentions(stripped.earg, x)) return v;
                if (deg == 0) c0.t.push_back(stripped);
                else if (deg == 1) c1.t.push_back(stripped);
                else if (deg == 2) c2.t.push_back(stripped);
                else return v;
            }
            SnfP den = std::make_shared<SnfT>(SnfT{E->den, const_poly(1)});
            auto mk = [&](Poly p) -> SnfP {
                if (p.t.empty()) return zero_;
                return s_div(std::make_shared<SnfT>(SnfT{canon_poly(std::move(p.t)), const_poly(1)}),
                             den);
            };
            v.A = mk(std::move(c2));
            v.B = mk(std::move(c1));
            v.C = mk(std::move(c0));
            v.has_exp = true;
        }
        v.rest = std::make_shared<SnfT>(SnfT{Poly{{rest}}, const_poly(1)});
        v.ok = true;
        return v;
    }

    SnfP sqrt_two_pi() {
        SnfP two_pi = s_mul(from_rational(Rational(2)), atom_snf(intern(AK::Pi, "pi", constant(SymConst::Pi))));
        return s_sqrt(two_pi);
    }

    // Gaussian moments E[x^k] for N(mean, sd): m0=1, m1=mu, mk = mu*m(k-1) + (k-1)*var*m(k-2)
    SnfP gaussian_moment(int k, const SnfP& mu, const SnfP& var) {
        if (k == 0) return one_;
        if (k == 1) return mu;
        SnfP m0 = one_, m1 = mu;
        for (int i = 2; i <= k; ++i) {
            SnfP mi = s_add(s_mul(mu, m1), s_mul(from_rational(Rational(i - 1)), s_mul(var, m0)));
            m0 = m1;
            m1 = mi;
        }
        return m1;
    }

    std::optional<SnfP> integrate_term(const Term& t, const Name& x, const ExprPtr& lo,
                                       const ExprPtr& hi) {
        XView v = term_x_view(t, x);
        if (!v.ok) return std::nullopt;
        bool lo_ninf = lo->tag == Tag::Infinity && lo->negative;
        bool hi_pinf = hi->tag == Tag::Infinity && !hi->negative;
        bool lo_inf = lo->tag == Tag::Infinity;
        bool hi_inf = hi->tag == Tag::Infinity;

        if (lo_ninf && hi_pinf) {
            // Whole line: requires a negative-definite quadratic exponent.
            if (!v.has_exp || !v.A || is_zero(v.A)) return std::nullopt;
            if (snf_sign(s_neg(v.A)) != Sign::Positive) return std::nullopt;
            SnfP var = s_div(from_rational(Rational(-1, 2)), v.A);  // sigma^2
            SnfP B = v.B ? v.B : zero_;
            SnfP mu = s_div(B, s_mul(from_rational(Rational(-2)), v.A));
            SnfP c_shift = s_div(s_mul(B, B), s_mul(from_rational(Rational(-4)), v.A));
            SnfP cpart = s_add(v.C ? v.C : zero_, c_shift);
            SnfP sigma = s_sqrt(var);
            SnfP out = s_mul(v.rest, s_exp(cpart));
            out = s_mul(out, s_mul(sigma, sqrt_two_pi()));
            out = s_mul(out, gaussian_moment(v.k, mu, var));
            return out;
        }
        if (!lo_inf && hi_pinf && is_lit(lo, Rational(0))) {
            // [0, inf): x^k exp(-r x) with positive rate.
            if (!v.has_exp || (v.A && !is_zero(v.A))) return std::nullopt;
            SnfP B = v.B ? v.B : zero_;
            if (is_zero(B)) return std::nullopt;
            SnfP rate = s_neg(B);
            if (snf_sign(rate) != Sign::Positive) return std::nullopt;
            SnfP out = s_mul(v.rest, s_exp(v.C ? v.C : zero_));
            out = s_mul(out, from_rational(factorial(v.k)));
            out = s_div(out, s_pow_int(rate, v.k + 1));
            return out;
        }
        if (lo_inf || hi_inf) return std::nullopt;
        // Finite bounds: polynomial only (the exp factor must be x-free,
        // which XView guarantees when A and B are absent).
        if (v.has_exp && ((v.A && !is_zero(v.A)) || (v.B && !is_zero(v.B)))) return std::nullopt;
        SnfP slo = to_snf(lo), shi = to_snf(hi);
        SnfP delta = s_sub(s_pow_int(shi, v.k + 1), s_pow_int(slo, v.k + 1));
        SnfP out = s_mul(v.rest, s_div(delta, from_rational(Rational(v.k + 1))));
        if (v.has_exp) out = s_mul(out, s_exp(v.C ? v.C : zero_));
        return out;
    }

    SnfP int_to_snf(const ExprPtr& e) {
        ExprPtr lo = e->kids[0]->tag == Tag::Infinity ? e->kids[0] : canon_scalar_cached(e->kids[0]);
        ExprPtr hi = e->kids[1]->tag == Tag::Infinity ? e->kids[1] : canon_scalar_cached(e->kids[1]);
        SnfP body = to_snf(e->kids[2]);
        const Name& x = e->name;
        if (!poly_mentions(body->den, x)) {
            SnfP acc = zero_;
            bool ok = true;
            for (const auto& t : body->num.t) {
                auto r = integrate_term(t, x, lo, hi);
                if (!r) {
                    ok = false;
                    break;
                }
                acc = s_add(acc, *r);
            }
            if (ok) {
                SnfP den = std::make_shared<SnfT>(SnfT{body->den, const_poly(1)});
                return s_div(acc, den);
            }
        }
        ExprPtr canon = integral(lo, hi, x, render(body));
        return atom_snf(intern(AK::Opaque, internal_key(canon), canon));
    }

    SnfP sum_to_snf(const ExprPtr& e) {
        ExprPtr lo = canon_scalar_cached(e->kids[0]);
        ExprPtr hi = canon_scalar_cached(e->kids[1]);
        SnfP body = to_snf(e->kids[2]);
        if (lo->tag == Tag::Lit && hi->tag == Tag::Lit && is_integer(lo->lit) &&
            is_integer(hi->lit)) {
            long l = static_cast<long>(numerator(lo->lit).convert_to<long long>());
            long h = static_cast<long>(numerator(hi->lit).convert_to<long long>());
            if (h < l) return zero_;
            if (h - l + 1 <= kMaxSumUnroll) {
                SnfP acc = zero_;
                for (long i = l; i <= h; ++i) {
                    ExprPtr instance = substitute(e->kids[2], e->name, lit(i), supply);
                    acc = s_add(acc, to_snf(instance));
                }
                return acc;
            }
        }
        ExprPtr canon = sum(lo, hi, e->name, render(body));
        return atom_snf(intern(AK::Opaque, internal_key(canon), canon));
    }

    // ---- rendering ----
    ExprPtr atom_expr(int id) const {
        const Atom& a = atoms[id];
        switch (a.kind) {
            case AK::Var:
            case AK::Opaque: return a.a;
            case AK::Pi: return constant(SymConst::Pi);
            case AK::Sqrt: return sqrt(a.a);
            case AK::PowSym: return pow(a.a, a.b);
            case AK::Ind: return if_(a.a, lit(1), lit(0));
            case AK::Eq: return eq_indicator(a.a, a.b);
        }
        return lit(0);
    }

    ExprPtr render_term(const Term& t, bool negate_coef) const {
        Rational c = negate_coef ? -t.coef : t.coef;
        // Split indicator atoms: a term c*ind(c1)*rest renders as
        // If(c1, c*rest, 0) so the surface form stays readable.
        std::vector<ExprPtr> conds;
        std::vector<ExprPtr> factors;
        for (auto& [id, e] : t.mono.f) {
            const Atom& a = atoms[id];
            if (a.kind == AK::Ind && e == 1) {
                conds.push_back(a.a);
                continue;
            }
            ExprPtr ae = atom_expr(id);
            factors.push_back(e == 1 ? ae : pow(ae, lit(e)));
        }
        if (t.earg) factors.push_back(exp(render(t.earg)));

        ExprPtr core;
        BigInt num = numerator(c), den = denominator(c);
        bool neg = num < 0;
        if (neg) num = -num;
        if (factors.empty()) {
            core = lit(Rational(num));
        } else {
            core = num == 1 ? factors[0] : lit(Rational(num));
            std::size_t start = num == 1 ? 1 : 0;
            for (std::size_t i = start; i < factors.size(); ++i) core = mul(core, factors[i]);
        }
        if (den != 1) core = div(core, lit(Rational(den)));
        for (auto it = conds.rbegin(); it != conds.rend(); ++it) {
            core = if_(*it, core, lit(0));
        }
        if (neg) core = neg_wrap(core);
        return core;
    }
    static ExprPtr neg_wrap(ExprPtr e) { return neg(std::move(e)); }

    ExprPtr render_poly(const Poly& p) const {
        if (p.t.empty()) return lit(0);
        // Lead with a positive term when there is one: "3 - x", not "-x + 3".
        std::size_t lead = 0;
        while (lead < p.t.size() && p.t[lead].coef < 0) ++lead;
        if (lead == p.t.size()) lead = 0;
        ExprPtr acc = render_term(p.t[lead], false);
        for (std::size_t i = 0; i < p.t.size(); ++i) {
            if (i == lead) continue;
            if (p.t[i].coef < 0) {
                acc = sub(acc, render_term(p.t[i], true));
            } else {
                acc = add(acc, render_term(p.t[i], false));
            }
        }
        return acc;
    }

    ExprPtr render(const SnfP& s) const {
        if (s->num.t.empty()) return lit(0);
        if (s->den.t.size() == 1 && term_is_const(s->den.t[0]) && s->den.t[0].coef == 1) {
            return render_poly(s->num);
        }
        return div(render_poly(s->num), render_poly(s->den));
    }

    // canon_scalar with a small memo for repeated subterms.
    std::map<std::string, ExprPtr> canon_memo;
    ExprPtr canon_scalar_cached(const ExprPtr& e) {
        std::string k = internal_key(e);
        auto it = canon_memo.find(k);
        if (it != canon_memo.end()) return it->second;
        ExprPtr r = render(to_snf(e));
        canon_memo.emplace(std::move(k), r);
        return r;
    }

    ExprPtr canon_bool(const ExprPtr& c) {
        if (is_bool_true(c) || is_bool_false(c)) return c;
        if (c->tag == Tag::Less) {
            SnfP d = s_sub(to_snf(c->kids[1]), to_snf(c->kids[0]));
            if (auto q = constant_of(d)) return *q > 0 ? bool_true() : bool_false();
            SnfP use = d;
            if (!(d->den.t.size() == 1 && term_is_const(d->den.t[0]))) {
                SnfP den = std::make_shared<SnfT>(SnfT{d->den, const_poly(1)});
                if (snf_sign(den) == Sign::Positive) {
                    use = std::make_shared<SnfT>(SnfT{d->num, const_poly(1)});
                } else {
                    return less(canon_scalar_cached(c->kids[0]), canon_scalar_cached(c->kids[1]));
                }
            }
            if (snf_sign(use) == Sign::Positive) return bool_true();
            if (snf_sign(s_neg(use)) != Sign::Unknown) return bool_false();  // use <= 0
            if (!use->num.t.empty() && use->num.t.front().coef < 0) {
                // render with a positive leading term on the left
                return less(render(s_neg(use)), lit(0));
            }
            return less(lit(0), render(use));
        }
        if (c->tag == Tag::If && is_bool_false(c->kids[2])) {
            ExprPtr a = canon_bool(c->kids[0]);
            ExprPtr b = canon_bool(c->kids[1]);
            if (is_bool_false(a)) return bool_false();
            if (is_bool_true(a)) return b;
            if (is_bool_true(b)) return a;
            if (is_bool_false(b)) return bool_false();
            return chain_and(a, b);
        }
        return child_canon(c);
    }
};

Engine::Engine(NameSupply& supply, Facts& facts, ChildCanon child_canon)
    : impl_(new Impl(supply, facts, std::move(child_canon))) {}
Engine::~Engine() { delete impl_; }

ExprPtr Engine::canon_scalar(const ExprPtr& e) { return impl_->canon_scalar_cached(e); }
ExprPtr Engine::canon_bool(const ExprPtr& c) { return impl_->canon_bool(c); }
void Engine::invalidate_fact_cache() { impl_->canon_memo.clear(); }

bool Engine::is_zero(const ExprPtr& e) { return impl_->is_zero(impl_->to_snf(e)); }
bool Engine::is_one(const ExprPtr& e) { return impl_->is_one(impl_->to_snf(e)); }
std::optional<Rational> Engine::constant_value(const ExprPtr& e) {
    return impl_->constant_of(impl_->to_snf(e));
}
Sign Engine::sign_of(const ExprPtr& e) { return impl_->snf_sign(impl_->to_snf(e)); }
std::string Engine::fact_key(const ExprPtr& e) { return impl_->snf_key(impl_->to_snf(e)); }

std::optional<Engine::GaussianForm> Engine::match_gaussian(const ExprPtr& density, const Name& x) {
    auto s = impl_->to_snf(density);
    if (impl_->poly_mentions(s->den, x)) return std::nullopt;
    if (s->num.t.size() != 1) return std::nullopt;
    auto v = impl_->term_x_view(s->num.t[0], x);
    if (!v.ok || v.k != 0 || !v.has_exp || !v.A || impl_->is_zero(v.A)) return std::nullopt;
    if (impl_->snf_sign(impl_->s_neg(v.A)) != Sign::Positive) return std::nullopt;
    auto var = impl_->s_div(impl_->from_rational(Rational(-1, 2)), v.A);
    auto B = v.B ? v.B : impl_->zero_;
    auto mu = impl_->s_div(B, impl_->s_mul(impl_->from_rational(Rational(-2)), v.A));
    return GaussianForm{impl_->render(mu), impl_->render(impl_->s_sqrt(var))};
}

std::optional<Engine::PowerExpForm> Engine::match_power_exp(const ExprPtr& density, const Name& x) {
    auto s = impl_->to_snf(density);
    if (impl_->poly_mentions(s->den, x)) return std::nullopt;

    PowerExpForm form;

    // Strip integer powers of (1 - x) off the numerator polynomial.
    auto one_minus_x = [&]() {
        Impl::Poly p;
        p.t.push_back(Impl::Term{Rational(1), {}, nullptr, {}});
        Impl::Term tx{Rational(-1), {}, nullptr, {}};
        int xid = impl_->intern(Impl::AK::Var, internal_key(var(x)), var(x));
        tx.mono.f.push_back({xid, 1});
        p.t.push_back(tx);
        return impl_->canon_poly(std::move(p.t));
    }();

    Impl::Poly num = s->num;
    long b_int = 0;
    while (b_int < kMaxIntExponent) {
        auto q = impl_->exact_divide(num, one_minus_x);
        if (!q) break;
        num = std::move(*q);
        ++b_int;
    }
    if (num.t.size() != 1) return std::nullopt;
    const Impl::Term& t = num.t[0];

    long a_int = 0;
    Impl::SnfP a_sym = impl_->zero_, b_sym = impl_->zero_;
    std::string x_key = impl_->snf_key(impl_->to_snf(var(x)));
    std::string omx_key = impl_->snf_key(impl_->s_sub(impl_->one_, impl_->to_snf(var(x))));
    for (auto& [id, e] : t.mono.f) {
        const auto& at = impl_->atoms[id];
        if (at.kind == Impl::AK::Var && at.a->name == x) {
            a_int = e;
            continue;
        }
        if (at.kind == Impl::AK::PowSym && at.payload && at.payload2) {
            std::string base_key = impl_->snf_key(at.payload);
            if (base_key == x_key) {
                a_sym = impl_->s_add(a_sym,
                                     impl_->s_mul(at.payload2, impl_->from_rational(Rational(e))));
                continue;
            }
            if (base_key == omx_key) {
                b_sym = impl_->s_add(b_sym,
                                     impl_->s_mul(at.payload2, impl_->from_rational(Rational(e))));
                continue;
            }
        }
        if (at.kind == Impl::AK::Ind) {
            form.indicator_conds.push_back(at.a);
            continue;
        }
        if (impl_->atom_mentions(id, x)) return std::nullopt;
    }

    // Exponential part: affine in x gives the rate.
    Impl::SnfP rate = impl_->zero_;
    if (t.earg) {
        const auto& E = t.earg;
        if (impl_->poly_mentions(E->den, x)) return std::nullopt;
        Impl::Poly c1;
        for (auto& et : E->num.t) {
            int deg = 0;
            Impl::Term stripped{et.coef, {}, et.earg, et.ekey};
            for (auto& [id, e] : et.mono.f) {
                const auto& at = impl_->atoms[id];
                if (at.kind == Impl::AK::Var && at.a->name == x) {
                    deg = e;
                } else {
                    if (impl_->atom_mentions(id, x)) return std::nullopt;
                    stripped.mono.f.push_back({id, e});
                }
            }
            if (deg > 1) return std::nullopt;
            if (deg == 1) c1.t.push_back(stripped);
        }
        auto den = std::make_shared<Impl::SnfT>(Impl::SnfT{E->den, Impl::const_poly(1)});
        auto c1p = impl_->canon_poly(std::move(c1.t));
        auto b_snf = std::make_shared<Impl::SnfT>(Impl::SnfT{std::move(c1p), Impl::const_poly(1)});
        rate = impl_->s_neg(impl_->s_div(b_snf, den));
    }

    form.x_exponent = impl_->render(impl_->s_add(a_sym, impl_->from_rational(Rational(a_int))));
    form.one_minus_x_exponent =
        impl_->render(impl_->s_add(b_sym, impl_->from_rational(Rational(b_int))));
    form.rate = impl_->render(rate);
    return form;
}

std::optional<Engine::AffineForm> Engine::match_affine(const ExprPtr& e, const Name& x) {
    auto s = impl_->to_snf(e);
    if (impl_->poly_mentions(s->den, x)) return std::nullopt;
    Impl::Poly c0, c1;
    for (const auto& t : s->num.t) {
        int deg = 0;
        Impl::Term stripped{t.coef, {}, t.earg, t.ekey};
        for (auto& [id, exp] : t.mono.f) {
            const auto& at = impl_->atoms[id];
            if (at.kind == Impl::AK::Var && at.a->name == x) {
                deg = exp;
            } else {
                if (impl_->atom_mentions(id, x)) return std::nullopt;
                stripped.mono.f.push_back({id, exp});
            }
        }
        if (t.earg && impl_->snf_mentions(t.earg, x)) return std::nullopt;
        if (deg == 0) c0.t.push_back(stripped);
        else if (deg == 1) c1.t.push_back(stripped);
        else return std::nullopt;
    }
    auto den = std::make_shared<Impl::SnfT>(Impl::SnfT{s->den, Impl::const_poly(1)});
    auto mk = [&](Impl::Poly p) {
        auto poly = impl_->canon_poly(std::move(p.t));
        auto snf = std::make_shared<Impl::SnfT>(Impl::SnfT{std::move(poly), Impl::const_poly(1)});
        return impl_->s_div(snf, den);
    };
    return AffineForm{impl_->render(mk(std::move(c1))), impl_->render(mk(std::move(c0)))};
}

}  // namespace probc::snf
