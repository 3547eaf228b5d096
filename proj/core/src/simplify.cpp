#include "probc/simplify.hpp"

#include <memory>
#include <optional>
#include <sstream>

#include "probc/errors.hpp"
#include "probc/expect.hpp"
#include "probc/printer.hpp"
#include "probc/snf.hpp"

namespace probc {

namespace {

bool contains_tag(const ExprPtr& e, Tag t) {
    if (e->tag == t) return true;
    for (const auto& k : e->kids) {
        if (contains_tag(k, t)) return true;
    }
    return false;
}

bool spine_is_measure_fn(const ExprPtr& f);

// Does the spine of this expression produce a measure?
bool spine_is_measure(const ExprPtr& e) {
    if (e->is_measure_tag()) return true;
    if (e->tag == Tag::If) return spine_is_measure(e->kids[1]) || spine_is_measure(e->kids[2]);
    if (e->tag == Tag::App) return spine_is_measure_fn(e->kids[0]);
    return false;
}
bool spine_is_measure_fn(const ExprPtr& f) {
    if (f->tag == Tag::Lam) return spine_is_measure(f->kids[0]);
    if (f->tag == Tag::App) return spine_is_measure_fn(f->kids[0]);
    return false;
}

bool spine_is_bool(const ExprPtr& e) {
    if (e->tag == Tag::Less) return true;
    if (e->tag == Tag::If) return spine_is_bool(e->kids[1]) || spine_is_bool(e->kids[2]);
    return false;
}

// Can this node be handed to the scalar normal form as a whole?
bool scalar_eligible(const ExprPtr& e) {
    switch (e->tag) {
        case Tag::Lit:
        case Tag::Const:
        case Tag::Neg:
        case Tag::Add:
        case Tag::Sub:
        case Tag::Mul:
        case Tag::Div:
        case Tag::Pow:
        case Tag::Exp:
        case Tag::Log:
        case Tag::Sqrt:
        case Tag::Sum:
        case Tag::Int: return true;
        case Tag::If:
            return !spine_is_bool(e->kids[1]) && !spine_is_measure(e->kids[1]) &&
                   !spine_is_measure(e->kids[2]) &&
                   (scalar_eligible(e->kids[1]) || scalar_eligible(e->kids[2]));
        default: return false;
    }
}

enum class Sort { Measure, Scalar, Boolean, Value };

struct Driver {
    NameSupply& supply;
    snf::Facts facts;
    std::unique_ptr<snf::Engine> engine;
    RewriteTrace* trace = nullptr;
    int budget = 10000;
    const std::set<std::string>* allowed = nullptr;  // null: all rules

    struct Hit {
        std::string rule;
        std::vector<int> path;
        ExprPtr before, after;
    };
    std::optional<Hit> hit;

    Driver(NameSupply& s, const Assumptions& assume) : supply(s) {
        engine = std::make_unique<snf::Engine>(supply, facts, [this](const ExprPtr& e) {
            return this->canon_cheap(e);
        });
        for (const auto& v : assume.positive_vars) {
            facts.positive.insert(engine->fact_key(var(Name{v, 0})));
        }
        for (const auto& e : assume.positive_exprs) {
            facts.positive.insert(engine->fact_key(e));
        }
    }

    bool rule_on(const char* name) const { return !allowed || allowed->count(name) > 0; }

    // Structural tidying for subterms frozen into atoms: no rules, no trace.
    ExprPtr canon_cheap(const ExprPtr& e) {
        switch (e->tag) {
            case Tag::Pair: return pair(canon_cheap(e->kids[0]), canon_cheap(e->kids[1]));
            case Tag::Fst:
            case Tag::Snd: {
                ExprPtr a = canon_cheap(e->kids[0]);
                if (a->tag == Tag::Pair) return e->tag == Tag::Fst ? a->kids[0] : a->kids[1];
                return with_kids(e, {a});
            }
            case Tag::App: {
                ExprPtr f = canon_cheap(e->kids[0]);
                if (f->tag == Tag::Lam) {
                    return canon_cheap(substitute(f->kids[0], f->name, e->kids[1], supply));
                }
                return with_kids(e, {f, canon_cheap(e->kids[1])});
            }
            case Tag::Lam: return with_kids(e, {canon_cheap(e->kids[0])});
            default: return e;
        }
    }

    // ---- scoped positivity facts ----
    struct ScopedFacts {
        Driver& d;
        std::vector<std::string> added;
        ScopedFacts(Driver& drv) : d(drv) {}
        void add(const ExprPtr& e) {
            std::string k = d.engine->fact_key(e);
            if (d.facts.positive.insert(k).second) {
                added.push_back(std::move(k));
                d.engine->invalidate_fact_cache();
            }
        }
        ~ScopedFacts() {
            for (auto& k : added) d.facts.positive.erase(k);
            if (!added.empty()) d.engine->invalidate_fact_cache();
        }
    };

    // Parameter positivity only (standard deviations, shapes, widths).
    void push_param_facts(const ExprPtr& rhs, ScopedFacts& sc) {
        switch (rhs->tag) {
            case Tag::Normal: sc.add(rhs->kids[1]); break;
            case Tag::Gamma:
            case Tag::Beta:
                sc.add(rhs->kids[0]);
                sc.add(rhs->kids[1]);
                break;
            case Tag::Uniform: sc.add(sub(rhs->kids[1], rhs->kids[0])); break;
            default: break;
        }
    }

    // Facts valid inside a bind's body: parameters plus the support of the
    // drawn value itself.
    void push_bind_facts(const ExprPtr& rhs, const Name& x, ScopedFacts& sc) {
        push_param_facts(rhs, sc);
        switch (rhs->tag) {
            case Tag::Gamma: sc.add(var(x)); break;
            case Tag::Beta:
                sc.add(var(x));
                sc.add(sub(lit(1), var(x)));
                break;
            case Tag::Uniform:
                if (engine->sign_of(rhs->kids[0]) != snf::Sign::Unknown) sc.add(var(x));
                break;
            default: break;
        }
    }

    // ---- the scan: returns the rewritten subtree of the first hit ----
    std::optional<ExprPtr> scan(const ExprPtr& e, Sort sort, std::vector<int>& path) {
        switch (sort) {
            case Sort::Scalar: {
                if (e->tag == Tag::Var || e->tag == Tag::Lit) return std::nullopt;
                ExprPtr c = engine->canon_scalar(e);
                if (!exprs_identical(c, e)) {
                    hit = Hit{"scalar-normalize", path, e, c};
                    return c;
                }
                return std::nullopt;
            }
            case Sort::Boolean: {
                ExprPtr c = engine->canon_bool(e);
                if (!exprs_identical(c, e)) {
                    hit = Hit{"bool-normalize", path, e, c};
                    return c;
                }
                return std::nullopt;
            }
            case Sort::Value: return scan_value(e, path);
            case Sort::Measure: return scan_measure(e, path);
        }
        return std::nullopt;
    }

    std::optional<ExprPtr> scan_child(const ExprPtr& e, int i, Sort sort, std::vector<int>& path) {
        path.push_back(i);
        auto r = scan(e->kids[i], sort, path);
        path.pop_back();
        if (!r) return std::nullopt;
        std::vector<ExprPtr> kids = e->kids;
        kids[i] = *r;
        return with_kids(e, std::move(kids));
    }

    std::optional<ExprPtr> scan_value(const ExprPtr& e, std::vector<int>& path) {
        if (spine_is_measure(e)) return scan_measure(e, path);
        if (spine_is_bool(e)) {
            ExprPtr c = engine->canon_bool(e);
            if (!exprs_identical(c, e)) {
                hit = Hit{"bool-normalize", path, e, c};
                return c;
            }
            return std::nullopt;
        }
        if (scalar_eligible(e)) {
            ExprPtr c = engine->canon_scalar(e);
            if (!exprs_identical(c, e)) {
                hit = Hit{"scalar-normalize", path, e, c};
                return c;
            }
            return std::nullopt;
        }
        switch (e->tag) {
            case Tag::Pair:
                if (auto r = scan_child(e, 0, Sort::Value, path)) return r;
                return scan_child(e, 1, Sort::Value, path);
            case Tag::Lam: return scan_child(e, 0, Sort::Value, path);
            case Tag::Fst:
            case Tag::Snd: {
                if (auto r = scan_child(e, 0, Sort::Value, path)) return r;
                if (rule_on("proj-beta") && e->kids[0]->tag == Tag::Pair) {
                    ExprPtr after = e->tag == Tag::Fst ? e->kids[0]->kids[0] : e->kids[0]->kids[1];
                    hit = Hit{"proj-beta", path, e, after};
                    return after;
                }
                return std::nullopt;
            }
            case Tag::App: {
                if (auto r = scan_child(e, 0, Sort::Value, path)) return r;
                if (auto r = scan_child(e, 1, Sort::Value, path)) return r;
                if (rule_on("beta") && e->kids[0]->tag == Tag::Lam) {
                    ExprPtr after = apply(e->kids[0], e->kids[1], supply);
                    hit = Hit{"beta", path, e, after};
                    return after;
                }
                return std::nullopt;
            }
            default: return std::nullopt;
        }
    }

    std::optional<ExprPtr> scan_measure(const ExprPtr& e, std::vector<int>& path) {
        switch (e->tag) {
            case Tag::Uniform:
            case Tag::Normal:
            case Tag::Gamma:
            case Tag::Beta:
                if (auto r = scan_child(e, 0, Sort::Scalar, path)) return r;
                if (auto r = scan_child(e, 1, Sort::Scalar, path)) return r;
                return std::nullopt;
            case Tag::Weight: {
                if (auto r = scan_child(e, 0, Sort::Scalar, path)) return r;
                if (auto r = scan_child(e, 1, Sort::Value, path)) return r;
                return try_weight_rules(e, path);
            }
            case Tag::Categorical:
            case Tag::Superpose: {
                for (std::size_t i = 0; i + 1 < e->kids.size(); i += 2) {
                    if (auto r = scan_child(e, static_cast<int>(i), Sort::Scalar, path)) return r;
                    Sort branch = e->tag == Tag::Superpose ? Sort::Measure : Sort::Value;
                    if (auto r = scan_child(e, static_cast<int>(i + 1), branch, path)) return r;
                }
                if (e->tag == Tag::Superpose) return try_superpose_rules(e, path);
                return std::nullopt;
            }
            case Tag::Bind: {
                if (auto r = scan_child(e, 0, Sort::Measure, path)) return r;
                {
                    ScopedFacts sc(*this);
                    push_bind_facts(e->kids[0], e->name, sc);
                    if (auto r = scan_child(e, 1, Sort::Measure, path)) return r;
                }
                return try_bind_rules(e, path);
            }
            case Tag::If: {
                if (auto r = scan_child(e, 0, Sort::Boolean, path)) return r;
                if (rule_on("if-fold")) {
                    if (is_bool_true(e->kids[0])) {
                        hit = Hit{"if-fold", path, e, e->kids[1]};
                        return e->kids[1];
                    }
                    if (is_bool_false(e->kids[0])) {
                        hit = Hit{"if-fold", path, e, e->kids[2]};
                        return e->kids[2];
                    }
                }
                if (auto r = scan_child(e, 1, Sort::Measure, path)) return r;
                if (auto r = scan_child(e, 2, Sort::Measure, path)) return r;
                return std::nullopt;
            }
            case Tag::App: {
                if (auto r = scan_child(e, 0, Sort::Value, path)) return r;
                if (auto r = scan_child(e, 1, Sort::Value, path)) return r;
                if (rule_on("beta") && e->kids[0]->tag == Tag::Lam) {
                    ExprPtr after = apply(e->kids[0], e->kids[1], supply);
                    hit = Hit{"beta", path, e, after};
                    return after;
                }
                return std::nullopt;
            }
            default: return scan_value(e, path);
        }
    }

    void fire(const char* rule, const std::vector<int>& path, const ExprPtr& before,
              const ExprPtr& after) {
        hit = Hit{rule, path, before, after};
    }

    std::optional<ExprPtr> try_weight_rules(const ExprPtr& e, std::vector<int>& path) {
        if (rule_on("weight-zero") && is_lit(e->kids[0], Rational(0))) {
            ExprPtr after = superpose({});
            fire("weight-zero", path, e, after);
            return after;
        }
        return std::nullopt;
    }

    std::optional<ExprPtr> try_superpose_rules(const ExprPtr& e, std::vector<int>& path) {
        std::size_t n = e->kids.size() / 2;
        // flatten nested superpose / weighted branches, drop zero weights
        if (rule_on("superpose-flatten")) {
            bool needs = false;
            for (std::size_t i = 0; i < n; ++i) {
                const ExprPtr& w = e->kids[2 * i];
                const ExprPtr& m = e->kids[2 * i + 1];
                if (is_lit(w, Rational(0)) || m->tag == Tag::Superpose ||
                    (m->tag == Tag::Weight && !is_lit(m->kids[0], Rational(1)))) {
                    needs = true;
                    break;
                }
            }
            if (needs) {
                std::vector<ExprPtr> flat;
                for (std::size_t i = 0; i < n; ++i) {
                    const ExprPtr& w = e->kids[2 * i];
                    const ExprPtr& m = e->kids[2 * i + 1];
                    if (is_lit(w, Rational(0))) continue;
                    if (m->tag == Tag::Superpose) {
                        for (std::size_t j = 0; j + 1 < m->kids.size(); j += 2) {
                            flat.push_back(mul(w, m->kids[j]));
                            flat.push_back(m->kids[j + 1]);
                        }
                    } else if (m->tag == Tag::Weight && !is_lit(m->kids[0], Rational(1))) {
                        flat.push_back(mul(w, m->kids[0]));
                        flat.push_back(dirac(m->kids[1]));
                    } else {
                        flat.push_back(w);
                        flat.push_back(m);
                    }
                }
                ExprPtr after = superpose(std::move(flat));
                fire("superpose-flatten", path, e, after);
                return after;
            }
        }
        if (rule_on("superpose-singleton") && n == 1) {
            const ExprPtr& w = e->kids[0];
            const ExprPtr& m = e->kids[1];
            if (is_lit(w, Rational(1))) {
                fire("superpose-singleton", path, e, m);
                return m;
            }
            if (is_dirac(m)) {
                ExprPtr after = weight(w, m->kids[1]);
                fire("superpose-singleton", path, e, after);
                return after;
            }
        }
        return std::nullopt;
    }

    std::optional<ExprPtr> try_bind_rules(const ExprPtr& e, std::vector<int>& path) {
        const Name& x = e->name;
        const ExprPtr& rhs = e->kids[0];
        const ExprPtr& body = e->kids[1];

        if (rule_on("bind-assoc") && rhs->tag == Tag::Bind) {
            Name y = rhs->name;
            ExprPtr inner_body = rhs->kids[1];
            if (occurs_free(body, y) || y == x) {
                Name fresh = supply.fresh(y.text);
                inner_body = substitute(inner_body, y, var(fresh), supply);
                y = fresh;
            }
            ExprPtr after = bind(y, rhs->kids[0], bind(x, inner_body, body));
            fire("bind-assoc", path, e, after);
            return after;
        }
        if (rhs->tag == Tag::Weight) {
            if (rule_on("bind-dirac") && is_dirac(rhs)) {
                ExprPtr after = substitute(body, x, rhs->kids[1], supply);
                fire("bind-dirac", path, e, after);
                return after;
            }
            if (rule_on("bind-weight") && !is_dirac(rhs)) {
                ExprPtr after =
                    superpose({rhs->kids[0], substitute(body, x, rhs->kids[1], supply)});
                fire("bind-weight", path, e, after);
                return after;
            }
        }
        if (rule_on("bind-superpose") && rhs->tag == Tag::Superpose) {
            std::vector<ExprPtr> flat;
            for (std::size_t i = 0; i + 1 < rhs->kids.size(); i += 2) {
                flat.push_back(rhs->kids[i]);
                flat.push_back(bind(x, rhs->kids[i + 1], body));
            }
            ExprPtr after = superpose(std::move(flat));
            fire("bind-superpose", path, e, after);
            return after;
        }
        if (rule_on("bind-categorical") && rhs->tag == Tag::Categorical &&
            body->tag == Tag::Weight && body->kids[1]->tag == Tag::Var &&
            body->kids[1]->name == x) {
            // Exact finite conditional: reweight each outcome.
            std::vector<ExprPtr> flat;
            for (std::size_t i = 0; i + 1 < rhs->kids.size(); i += 2) {
                ExprPtr w = substitute(body->kids[0], x, rhs->kids[i + 1], supply);
                flat.push_back(mul(rhs->kids[i], w));
                flat.push_back(rhs->kids[i + 1]);
            }
            ExprPtr after = categorical(std::move(flat));
            fire("bind-categorical", path, e, after);
            return after;
        }
        if (body->tag == Tag::Weight && body->kids[1]->tag == Tag::Var &&
            body->kids[1]->name == x) {
            const ExprPtr& w = body->kids[0];
            if (rule_on("bind-eta") && is_lit(w, Rational(1))) {
                fire("bind-eta", path, e, rhs);
                return rhs;
            }
            if (rule_on("weight-const") && !occurs_free(w, x)) {
                ExprPtr after = superpose({w, rhs});
                fire("weight-const", path, e, after);
                return after;
            }
            if (rule_on("recognize") && is_primitive_dist(rhs)) {
                if (auto after = recognize(x, rhs, w)) {
                    fire("recognize", path, e, *after);
                    return after;
                }
            }
        }
        if (rule_on("marginalize") && body->tag == Tag::Weight &&
            !occurs_free(body->kids[1], x) && is_primitive_dist(rhs)) {
            ScopedFacts sc(*this);
            push_param_facts(rhs, sc);
            ExprPtr integral_expr = expect(rhs, lam(x, body->kids[0]), supply);
            ExprPtr closed = engine->canon_scalar(integral_expr);
            if (!contains_tag(closed, Tag::Int)) {
                ExprPtr after = weight(closed, body->kids[1]);
                fire("marginalize", path, e, after);
                return after;
            }
        }
        if (rule_on("gaussian-conv") && rhs->tag == Tag::Normal && body->tag == Tag::Normal &&
            occurs_free(body->kids[0], x) && !occurs_free(body->kids[1], x)) {
            ScopedFacts sc(*this);
            push_param_facts(rhs, sc);
            if (auto aff = engine->match_affine(body->kids[0], x)) {
                // x ~ N(a, s); N(c1*x + c0, t)  ==  N(c1*a + c0, sqrt(c1^2 s^2 + t^2))
                ExprPtr mean = engine->canon_scalar(
                    add(mul(aff->slope, rhs->kids[0]), aff->intercept));
                ExprPtr sd = engine->canon_scalar(
                    sqrt(add(mul(mul(aff->slope, aff->slope), mul(rhs->kids[1], rhs->kids[1])),
                             mul(body->kids[1], body->kids[1]))));
                ExprPtr after = normal(mean, sd);
                fire("gaussian-conv", path, e, after);
                return after;
            }
        }
        return std::nullopt;
    }

    // Bind(x, prim, Weight(w, Var x)): match the accumulated density
    // against the Normal/Beta/Gamma table.
    std::optional<ExprPtr> recognize(const Name& x, const ExprPtr& prim, const ExprPtr& w) {
        ScopedFacts sc(*this);
        push_param_facts(prim, sc);
        ExprPtr density = mul(primitive_pdf(prim, var(x), supply), w);

        auto finish = [&](const ExprPtr& candidate, const ExprPtr& pdf) -> std::optional<ExprPtr> {
            ExprPtr mass = engine->canon_scalar(div(density, pdf));
            if (occurs_free(mass, x)) return std::nullopt;
            if (engine->is_one(mass)) return candidate;
            if (alpha_equal(candidate, prim)) return std::nullopt;  // no progress
            return superpose({mass, candidate});
        };

        if (auto g = engine->match_gaussian(density, x)) {
            ExprPtr candidate = normal(g->mean, g->sd);
            return finish(candidate, primitive_pdf_unguarded(candidate, var(x), supply));
        }
        if (auto p = engine->match_power_exp(density, x)) {
            // support indicators decide the family
            std::set<std::string> conds;
            for (const auto& c : p->indicator_conds) conds.insert(internal_key(engine->canon_bool(c)));
            std::string pos_x = internal_key(engine->canon_bool(less(lit(0), var(x))));
            std::string lt_one = internal_key(engine->canon_bool(less(var(x), lit(1))));
            bool rate_zero = engine->is_zero(p->rate);
            bool b_zero = engine->is_zero(p->one_minus_x_exponent);
            if (!rate_zero && b_zero && conds == std::set<std::string>{pos_x} &&
                engine->sign_of(p->rate) == snf::Sign::Positive) {
                ExprPtr shape = engine->canon_scalar(add(p->x_exponent, lit(1)));
                ExprPtr scale = engine->canon_scalar(div(lit(1), p->rate));
                if (engine->sign_of(shape) == snf::Sign::Positive) {
                    ExprPtr candidate = gamma_d(shape, scale);
                    return finish(candidate, primitive_pdf(candidate, var(x), supply));
                }
            }
            if (rate_zero && conds == std::set<std::string>{pos_x, lt_one}) {
                ExprPtr a = engine->canon_scalar(add(p->x_exponent, lit(1)));
                ExprPtr b = engine->canon_scalar(add(p->one_minus_x_exponent, lit(1)));
                if (engine->sign_of(a) == snf::Sign::Positive &&
                    engine->sign_of(b) == snf::Sign::Positive) {
                    ExprPtr candidate = beta_d(a, b);
                    return finish(candidate, primitive_pdf(candidate, var(x), supply));
                }
            }
        }
        return std::nullopt;
    }

    ExprPtr run(ExprPtr root) {
        Sort sort = root_sort(root);
        int steps = 0;
        while (steps < budget) {
            hit.reset();
            std::vector<int> path;
            auto r = scan(root, sort, path);
            if (!r) break;
            root = *r;
            ++steps;
            if (trace && hit) trace->steps.push_back({hit->rule, hit->path, hit->before, hit->after});
        }
        return root;
    }

    static Sort root_sort(const ExprPtr& e) {
        if (spine_is_measure(e)) return Sort::Measure;
        if (spine_is_bool(e)) return Sort::Boolean;
        if (scalar_eligible(e) || e->tag == Tag::Var) return Sort::Scalar;
        return Sort::Value;
    }
};

const std::set<std::string> kIntegrateOutRules = {
    "beta",        "proj-beta",      "if-fold",         "bind-assoc",
    "bind-dirac",  "bind-weight",    "bind-superpose",  "bind-categorical",
    "bind-eta",    "weight-const",   "weight-zero",     "superpose-flatten",
    "superpose-singleton", "marginalize", "gaussian-conv"};

const std::set<std::string> kRecognizeRules = {
    "beta",        "proj-beta",      "if-fold",         "bind-assoc",
    "bind-dirac",  "bind-weight",    "bind-superpose",  "bind-categorical",
    "bind-eta",    "weight-const",   "weight-zero",     "superpose-flatten",
    "superpose-singleton", "recognize"};

}  // namespace

ExprPtr simplify(const ExprPtr& e, NameSupply& supply, const SimplifyOptions& opts) {
    Driver d(supply, opts.assume);
    d.trace = opts.trace;
    d.budget = opts.budget;
    return d.run(e);
}

ExprPtr recognize_density(const ExprPtr& m, NameSupply& supply, const SimplifyOptions& opts) {
    Driver d(supply, opts.assume);
    d.trace = opts.trace;
    d.budget = opts.budget;
    d.allowed = &kRecognizeRules;
    return d.run(m);
}

ExprPtr integrate_out(const ExprPtr& e, NameSupply& supply, const SimplifyOptions& opts) {
    Driver d(supply, opts.assume);
    d.trace = opts.trace;
    d.budget = opts.budget;
    d.allowed = &kIntegrateOutRules;
    return d.run(e);
}

namespace {
// Positional binder renaming: canonical forms sort terms by variable name,
// so alpha-variants must agree on binder spellings before comparison.
ExprPtr alpha_canon(const ExprPtr& e, int& counter, NameSupply& supply) {
    if (e->kids.empty()) return e;
    if (e->is_binder()) {
        Name fresh{"%c" + std::to_string(++counter), 0};
        int body = e->body_index();
        std::vector<ExprPtr> kids = e->kids;
        kids[body] = substitute(kids[body], e->name, var(fresh), supply);
        for (int i = 0; i < static_cast<int>(kids.size()); ++i) {
            kids[i] = alpha_canon(kids[i], counter, supply);
        }
        auto r = with_kids(e, std::move(kids));
        const_cast<Expr&>(*r).name = fresh;
        return r;
    }
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids.size());
    for (const auto& k : e->kids) kids.push_back(alpha_canon(k, counter, supply));
    return with_kids(e, std::move(kids));
}
}  // namespace

bool simplify_equal(const ExprPtr& a, const ExprPtr& b, NameSupply& supply,
                    const SimplifyOptions& opts) {
    SimplifyOptions o;
    o.assume = opts.assume;
    o.budget = opts.budget;
    auto canon = [&](const ExprPtr& e) {
        ExprPtr s1 = simplify(e, supply, o);
        int counter = 0;
        ExprPtr renamed = alpha_canon(s1, counter, supply);
        return simplify(renamed, supply, o);
    };
    return alpha_equal(canon(a), canon(b));
}

namespace {
void collect_facts_walk(const ExprPtr& e, const std::set<Name>& top_free, Assumptions& out) {
    auto keep = [&](const ExprPtr& cand) {
        for (const auto& n : free_vars(cand)) {
            if (!top_free.count(n)) return;
        }
        out.add_expr(cand);
    };
    switch (e->tag) {
        case Tag::Normal: keep(e->kids[1]); break;
        case Tag::Gamma:
        case Tag::Beta:
            keep(e->kids[0]);
            keep(e->kids[1]);
            break;
        case Tag::Uniform: keep(sub(e->kids[1], e->kids[0])); break;
        default: break;
    }
    for (const auto& k : e->kids) collect_facts_walk(k, top_free, out);
}
}  // namespace

Assumptions collect_program_facts(const ExprPtr& program) {
    Assumptions out;
    collect_facts_walk(program, free_vars(program), out);
    return out;
}

std::string RewriteTrace::to_json() const {
    std::ostringstream os;
    os << "{\"steps\": [";
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) os << ", ";
        os << "{\"rule\": \"" << steps[i].rule << "\", \"path\": \"";
        for (std::size_t j = 0; j < steps[i].path.size(); ++j) {
            if (j) os << '.';
            os << steps[i].path[j];
        }
        os << "\", \"before\": \"";
        for (char c : pretty(steps[i].before)) {
            if (c == '"' || c == '\\') os << '\\';
            os << (c == '\n' ? ' ' : c);
        }
        os << "\", \"after\": \"";
        for (char c : pretty(steps[i].after)) {
            if (c == '"' || c == '\\') os << '\\';
            os << (c == '\n' ? ' ' : c);
        }
        os << "\"}";
    }
    os << "]}";
    return os.str();
}

namespace {
ExprPtr replace_at_path(const ExprPtr& root, const std::vector<int>& path, std::size_t i,
                        const ExprPtr& before, const ExprPtr& after) {
    if (i == path.size()) {
        if (!alpha_equal(root, before)) {
            throw TransformError("trace replay: subterm does not match the recorded step");
        }
        return after;
    }
    int k = path[i];
    if (k < 0 || k >= static_cast<int>(root->kids.size())) {
        throw TransformError("trace replay: invalid path");
    }
    std::vector<ExprPtr> kids = root->kids;
    kids[k] = replace_at_path(kids[k], path, i + 1, before, after);
    return with_kids(root, std::move(kids));
}
}  // namespace

ExprPtr replay_trace(const ExprPtr& input, const RewriteTrace& trace) {
    ExprPtr cur = input;
    for (const auto& s : trace.steps) {
        cur = replace_at_path(cur, s.path, 0, s.before, s.after);
    }
    return cur;
}

}  // namespace probc
