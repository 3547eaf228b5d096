#ifndef PROBC_EXPR_HPP
#define PROBC_EXPR_HPP

#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "probc/rational.hpp"

namespace probc {

// Variable identity. Source names carry uid 0; every name minted by a
// NameSupply gets a uid that is unique within one pipeline run, so renaming
// for capture avoidance can reuse the original text.
struct Name {
    std::string text;
    std::uint64_t uid = 0;

    friend bool operator==(const Name& a, const Name& b) {
        return a.uid == b.uid && a.text == b.text;
    }
    friend bool operator!=(const Name& a, const Name& b) { return !(a == b); }
    friend bool operator<(const Name& a, const Name& b) {
        if (a.text != b.text) return a.text < b.text;
        return a.uid < b.uid;
    }
};

class NameSupply {
public:
    Name fresh(const std::string& text) { return Name{text, next_++}; }

private:
    std::uint64_t next_ = 1;
};

enum class Tag : std::uint8_t {
    Var,
    Lit,       // exact rational constant
    Const,     // symbolic irrational constant (pi, e)
    Infinity,  // +/- infinity, legal only in Int/Sum bounds
    UnitE,     // the unit value
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Less,
    Exp,
    Log,
    Sqrt,
    If,
    Sum,  // Sum(lo, hi, var, body)
    Int,  // Int(lo, hi, var, body)
    Lam,
    App,
    Pair,
    Fst,
    Snd,
    Uniform,
    Normal,
    Gamma,
    Beta,
    Weight,       // Weight(w, point)
    Categorical,  // kids = [w0, e0, w1, e1, ...], normalizing
    Superpose,    // kids = [w0, m0, w1, m1, ...], non-normalizing
    Bind,         // Bind(var, rhs, body): kids = [rhs, body]
};

enum class SymConst : std::uint8_t { Pi, Euler };

struct SourceSpan {
    int line = 0, column = 0, end_line = 0, end_column = 0;
    bool known() const { return line > 0; }
    std::string to_string() const;
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression node. Children layout by tag:
//   Lam:      [body]              binder `name` scopes body
//   Bind:     [rhs, body]         binder scopes body only
//   Sum/Int:  [lo, hi, body]      binder scopes body only
//   If:       [cond, then, else]
//   Categorical/Superpose: [w0, e0, w1, e1, ...]
// everything else: operands in source order.
class Expr : public std::enable_shared_from_this<Expr> {
public:
    Tag tag;
    Name name;           // Var payload and binder name
    Rational lit;        // Lit payload
    SymConst sym = SymConst::Pi;
    bool negative = false;  // Infinity sign
    std::vector<ExprPtr> kids;
    SourceSpan span;

    Expr(Tag t, std::vector<ExprPtr> k) : tag(t), kids(std::move(k)) {}

    bool is_binder() const {
        return tag == Tag::Lam || tag == Tag::Bind || tag == Tag::Sum || tag == Tag::Int;
    }
    // Index of the child scoped by `name`; -1 for non-binders.
    int body_index() const {
        switch (tag) {
            case Tag::Lam: return 0;
            case Tag::Bind: return 1;
            case Tag::Sum:
            case Tag::Int: return 2;
            default: return -1;
        }
    }
    bool is_measure_tag() const {
        switch (tag) {
            case Tag::Uniform:
            case Tag::Normal:
            case Tag::Gamma:
            case Tag::Beta:
            case Tag::Weight:
            case Tag::Categorical:
            case Tag::Superpose:
            case Tag::Bind: return true;
            default: return false;
        }
    }
};

// --- constructors ---
ExprPtr var(Name n);
ExprPtr lit(Rational q);
ExprPtr lit(long n);
ExprPtr constant(SymConst c);
ExprPtr infinity(bool negative);
ExprPtr unit_e();
ExprPtr neg(ExprPtr a);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr pow(ExprPtr a, ExprPtr b);
ExprPtr less(ExprPtr a, ExprPtr b);
ExprPtr exp(ExprPtr a);
ExprPtr log(ExprPtr a);
ExprPtr sqrt(ExprPtr a);
ExprPtr if_(ExprPtr c, ExprPtr t, ExprPtr e);
ExprPtr sum(ExprPtr lo, ExprPtr hi, Name v, ExprPtr body);
ExprPtr integral(ExprPtr lo, ExprPtr hi, Name v, ExprPtr body);
ExprPtr lam(Name v, ExprPtr body);
ExprPtr app(ExprPtr f, ExprPtr a);
ExprPtr pair(ExprPtr a, ExprPtr b);
ExprPtr fst(ExprPtr a);
ExprPtr snd(ExprPtr a);
ExprPtr uniform(ExprPtr lo, ExprPtr hi);
ExprPtr normal(ExprPtr mean, ExprPtr sd);
ExprPtr gamma_d(ExprPtr shape, ExprPtr scale);
ExprPtr beta_d(ExprPtr a, ExprPtr b);
ExprPtr weight(ExprPtr w, ExprPtr point);
ExprPtr dirac(ExprPtr point);
ExprPtr categorical(std::vector<ExprPtr> flat_pairs);
ExprPtr superpose(std::vector<ExprPtr> flat_pairs);
ExprPtr bind(Name v, ExprPtr rhs, ExprPtr body);
ExprPtr with_kids(const ExprPtr& e, std::vector<ExprPtr> kids);

// Canonical boolean forms; the grammar has no boolean literals, so `0 < 1`
// and `0 < 0` stand in for true and false.
ExprPtr bool_true();
ExprPtr bool_false();
bool is_bool_true(const ExprPtr& e);
bool is_bool_false(const ExprPtr& e);
// Short-circuit conjunction: If(a, b, false). `a < b < c` desugars to this.
ExprPtr chain_and(ExprPtr a, ExprPtr b);
// Real-valued equality indicator: If(a<b, 0, If(b<a, 0, 1)).
ExprPtr eq_indicator(ExprPtr a, ExprPtr b);

bool is_lit(const ExprPtr& e, const Rational& q);
bool is_dirac(const ExprPtr& e);  // Weight with literal weight 1

// Right-nested tuple from >= 1 components.
ExprPtr tuple(const std::vector<ExprPtr>& parts);

// --- analyses ---
std::set<Name> free_vars(const ExprPtr& e);
bool occurs_free(const ExprPtr& e, const Name& n);

// Capture-avoiding simultaneous substitution.
ExprPtr substitute(const ExprPtr& e, const std::map<Name, ExprPtr>& subst, NameSupply& supply);
ExprPtr substitute(const ExprPtr& e, const Name& x, const ExprPtr& v, NameSupply& supply);

bool alpha_equal(const ExprPtr& a, const ExprPtr& b);

// Structural identity including binder names (used by rewriting internals).
bool exprs_identical(const ExprPtr& a, const ExprPtr& b);

// Replaces every occurrence of `target` (matched with exprs_identical) by
// `replacement`; does not descend into a matched subterm.
ExprPtr replace_subterm(const ExprPtr& e, const ExprPtr& target, const ExprPtr& replacement);

std::size_t expr_size(const ExprPtr& e);

// Deterministic uid-aware serialization; distinct names never collide,
// unlike pretty() which chooses reader-facing spellings.
std::string internal_key(const ExprPtr& e);

// Beta-reduce App(Lam(x, b), a) if f is a literal lambda, else emit App.
ExprPtr apply(const ExprPtr& f, const ExprPtr& a, NameSupply& supply);

}  // namespace probc

#endif
