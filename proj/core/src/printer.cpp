#include "probc/printer.hpp"

#include <cctype>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

namespace probc {

namespace {

// Precedence levels: bind 0, comparison 1, additive 2, multiplicative 3,
// unary minus 4, power 5, projection 6, atom 7.
constexpr int kBind = 0, kCmp = 1, kAdd = 2, kMul = 3, kNeg = 4, kPow = 5, kPost = 6, kAtom = 7;

bool is_reserved_word(const std::string& s) {
    static const std::set<std::string> kw = {
        "If",   "Lam",    "App",   "Sum",   "Int",         "Uniform",   "Normal", "Gamma",
        "Beta", "Weight", "Dirac", "Categorical", "Superpose", "Fst",    "Snd",
        "exp",  "log",    "sqrt",  "pi",    "e",           "inf",       "Unit"};
    return kw.count(s) > 0;
}

std::string sanitize(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') out += c;
    }
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "x" + out;
    return out;
}

// Does `n` occur anywhere in `e` outside an immediate Fst/Snd projection,
// or get rebound? Used to decide tuple-binder recovery.
struct RawUse {
    const Name& n;
    bool raw = false, rebound = false;

    void scan(const ExprPtr& e) {
        if (e->tag == Tag::Var) {
            if (e->name == n) raw = true;
            return;
        }
        if (e->is_binder() && e->name == n) {
            rebound = true;
            return;  // occurrences below are shadowed
        }
        if ((e->tag == Tag::Fst || e->tag == Tag::Snd) && e->kids[0]->tag == Tag::Var &&
            e->kids[0]->name == n) {
            return;  // projected use
        }
        for (const auto& k : e->kids) scan(k);
    }
};

struct Printer {
    std::ostringstream os;
    std::map<Name, std::string> printed;
    std::set<std::string> in_scope;

    std::string pick(const std::string& base) {
        std::string cand = sanitize(base);
        if (is_reserved_word(cand)) cand += "_";
        if (!in_scope.count(cand)) return cand;
        for (int k = 2;; ++k) {
            std::string c2 = cand + "_" + std::to_string(k);
            if (!in_scope.count(c2)) return c2;
        }
    }

    // Pattern recovery: a binder used only through projections prints as a
    // tuple pattern. Leaves are synthetic names carrying '%' so they cannot
    // collide with source names.
    struct Pat {
        std::optional<Name> leaf;
        std::unique_ptr<Pat> a, b;
    };

    static bool only_projected(const ExprPtr& body, const Name& n) {
        RawUse u{n};
        u.scan(body);
        return !u.raw && !u.rebound && occurs_free(body, n);
    }

    Pat recover_pattern(const Name& n, ExprPtr& body, int depth = 0) {
        if (depth >= 3 || !only_projected(body, n)) {
            Pat p;
            p.leaf = n;
            return p;
        }
        Name na{n.text + "%0", n.uid};
        Name nb{n.text + "%1", n.uid};
        body = replace_subterm(body, fst(var(n)), var(na));
        body = replace_subterm(body, snd(var(n)), var(nb));
        Pat p;
        p.a = std::make_unique<Pat>(recover_pattern(na, body, depth + 1));
        p.b = std::make_unique<Pat>(recover_pattern(nb, body, depth + 1));
        return p;
    }

    struct Scope {
        Printer& pr;
        std::vector<std::pair<Name, std::optional<std::string>>> saved = {};
        std::vector<std::string> added = {};
        ~Scope() {
            for (auto& s : added) pr.in_scope.erase(s);
            for (auto& [n, old] : saved) {
                if (old) pr.printed[n] = *old;
                else pr.printed.erase(n);
            }
        }
    };

    void print_pattern(const Pat& p, Scope& sc) {
        if (p.leaf) {
            std::string s = pick(p.leaf->text);
            os << s;
            enter(sc, *p.leaf, s);
            return;
        }
        os << "(";
        print_pattern(*p.a, sc);
        os << ", ";
        print_pattern(*p.b, sc);
        os << ")";
    }

    void enter(Scope& sc, const Name& n, const std::string& s) {
        auto it = printed.find(n);
        sc.saved.push_back({n, it == printed.end() ? std::nullopt : std::optional(it->second)});
        printed[n] = s;
        if (!in_scope.count(s)) {
            in_scope.insert(s);
            sc.added.push_back(s);
        }
    }

    void parens(bool need, const std::function<void()>& f) {
        if (need) os << "(";
        f();
        if (need) os << ")";
    }

    // a < b [< c]: recognize the desugared conjunction chain.
    bool try_chain(const ExprPtr& e, std::vector<ExprPtr>& ops) {
        if (e->tag == Tag::Less) {
            ops.push_back(e->kids[0]);
            ops.push_back(e->kids[1]);
            return true;
        }
        if (e->tag == Tag::If && e->kids[0]->tag == Tag::Less && is_bool_false(e->kids[2])) {
            std::vector<ExprPtr> rest;
            if (!try_chain(e->kids[1], rest)) return false;
            if (!exprs_identical(e->kids[0]->kids[1], rest[0])) return false;
            ops.push_back(e->kids[0]->kids[0]);
            ops.insert(ops.end(), rest.begin(), rest.end());
            return true;
        }
        return false;
    }

    void call(const std::string& fn, std::initializer_list<ExprPtr> args) {
        os << fn << "(";
        bool first = true;
        for (const auto& a : args) {
            if (!first) os << ", ";
            first = false;
            print(a, kBind);
        }
        os << ")";
    }

    void print(const ExprPtr& e, int min_prec) {
        switch (e->tag) {
            case Tag::Var: {
                auto it = printed.find(e->name);
                os << (it != printed.end() ? it->second : sanitize(e->name.text));
                return;
            }
            case Tag::Lit: {
                const Rational& q = e->lit;
                if (q < 0) {
                    parens(min_prec > kNeg, [&] { os << rational_to_string(q); });
                } else if (!is_integer(q)) {
                    parens(min_prec > kMul, [&] { os << rational_to_string(q); });
                } else {
                    os << rational_to_string(q);
                }
                return;
            }
            case Tag::Const: os << (e->sym == SymConst::Pi ? "pi" : "e"); return;
            case Tag::Infinity:
                parens(e->negative && min_prec > kNeg, [&] { os << (e->negative ? "-inf" : "inf"); });
                return;
            case Tag::UnitE: os << "Unit"; return;
            case Tag::Neg:
                parens(min_prec > kNeg, [&] {
                    os << "-";
                    print(e->kids[0], kPow);
                });
                return;
            case Tag::Add:
            case Tag::Sub:
                parens(min_prec > kAdd, [&] {
                    print(e->kids[0], kAdd);
                    os << (e->tag == Tag::Add ? " + " : " - ");
                    print(e->kids[1], kMul);
                });
                return;
            case Tag::Mul:
            case Tag::Div:
                parens(min_prec > kMul, [&] {
                    print(e->kids[0], kMul);
                    os << (e->tag == Tag::Mul ? " * " : " / ");
                    print(e->kids[1], kNeg);
                });
                return;
            case Tag::Pow:
                parens(min_prec > kPow, [&] {
                    print(e->kids[0], kPost);
                    os << "^";
                    print(e->kids[1], kPow);
                });
                return;
            case Tag::Less:
            case Tag::If: {
                std::vector<ExprPtr> ops;
                if (try_chain(e, ops)) {
                    parens(min_prec > kCmp, [&] {
                        for (std::size_t i = 0; i < ops.size(); ++i) {
                            if (i) os << " < ";
                            print(ops[i], kAdd);
                        }
                    });
                    return;
                }
                if (e->tag == Tag::Less) {
                    parens(min_prec > kCmp, [&] {
                        print(e->kids[0], kAdd);
                        os << " < ";
                        print(e->kids[1], kAdd);
                    });
                } else {
                    call("If", {e->kids[0], e->kids[1], e->kids[2]});
                }
                return;
            }
            case Tag::Exp: call("exp", {e->kids[0]}); return;
            case Tag::Log: call("log", {e->kids[0]}); return;
            case Tag::Sqrt: call("sqrt", {e->kids[0]}); return;
            case Tag::Sum:
            case Tag::Int: {
                os << (e->tag == Tag::Sum ? "Sum(" : "Int(");
                print(e->kids[0], kBind);
                os << ", ";
                print(e->kids[1], kBind);
                os << ", ";
                Scope sc{*this};
                std::string s = pick(e->name.text);
                enter(sc, e->name, s);
                os << s << ", ";
                print(e->kids[2], kBind);
                os << ")";
                return;
            }
            case Tag::Lam: {
                os << "Lam(";
                ExprPtr body = e->kids[0];
                Scope sc{*this};
                Pat pat = recover_pattern(e->name, body);
                print_pattern(pat, sc);
                os << ", ";
                print(body, kBind);
                os << ")";
                return;
            }
            case Tag::App: call("App", {e->kids[0], e->kids[1]}); return;
            case Tag::Pair: {
                os << "(";
                print(e->kids[0], kBind);
                os << ", ";
                print(e->kids[1], kBind);
                os << ")";
                return;
            }
            case Tag::Fst:
            case Tag::Snd:
                parens(min_prec > kPost, [&] {
                    print(e->kids[0], kPost);
                    os << (e->tag == Tag::Fst ? "[0]" : "[1]");
                });
                return;
            case Tag::Uniform: call("Uniform", {e->kids[0], e->kids[1]}); return;
            case Tag::Normal: call("Normal", {e->kids[0], e->kids[1]}); return;
            case Tag::Gamma: call("Gamma", {e->kids[0], e->kids[1]}); return;
            case Tag::Beta: call("Beta", {e->kids[0], e->kids[1]}); return;
            case Tag::Weight:
                if (is_dirac(e)) call("Dirac", {e->kids[1]});
                else call("Weight", {e->kids[0], e->kids[1]});
                return;
            case Tag::Categorical:
            case Tag::Superpose: {
                os << (e->tag == Tag::Categorical ? "Categorical(" : "Superpose(");
                for (std::size_t i = 0; i + 1 < e->kids.size(); i += 2) {
                    if (i) os << ", ";
                    os << "(";
                    print(e->kids[i], kBind);
                    os << ", ";
                    print(e->kids[i + 1], kBind);
                    os << ")";
                }
                os << ")";
                return;
            }
            case Tag::Bind: {
                parens(min_prec > kBind, [&] {
                    // The rhs is outside the binder's scope: render it first.
                    std::ostringstream rhs_out;
                    std::swap(rhs_out, os);
                    print(e->kids[0], kCmp);
                    std::swap(rhs_out, os);

                    ExprPtr body = e->kids[1];
                    Scope sc{*this};
                    Pat pat = recover_pattern(e->name, body);
                    print_pattern(pat, sc);
                    os << " <~ " << rhs_out.str() << ";\n";
                    print(body, kBind);
                });
                return;
            }
        }
    }
};

}  // namespace

std::string pretty(const ExprPtr& e) {
    Printer pr;
    // Reserve free-variable spellings first; distinct free names that share
    // a text are disambiguated deterministically.
    for (const auto& n : free_vars(e)) {
        std::string s = sanitize(n.text);
        if (is_reserved_word(s)) s += "_";
        if (pr.in_scope.count(s)) s = s + "_u" + std::to_string(n.uid);
        pr.printed[n] = s;
        pr.in_scope.insert(s);
    }
    pr.print(e, 0);
    return pr.os.str();
}

}  // namespace probc
