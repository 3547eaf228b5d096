#include "probc/disintegrate.hpp"

#include <optional>

#include "probc/errors.hpp"
#include "probc/expect.hpp"
#include "probc/printer.hpp"

namespace probc {

namespace {

void register_fact(Assumptions* facts, const ExprPtr& candidate, const std::set<Name>& model_free) {
    if (!facts) return;
    for (const auto& n : free_vars(candidate)) {
        if (!model_free.count(n)) return;  // mentions a bound variable
    }
    facts->add_expr(candidate);
}

void register_dist_facts(Assumptions* facts, const ExprPtr& dist, const std::set<Name>& model_free) {
    switch (dist->tag) {
        case Tag::Normal: register_fact(facts, dist->kids[1], model_free); break;
        case Tag::Gamma:
        case Tag::Beta:
            register_fact(facts, dist->kids[0], model_free);
            register_fact(facts, dist->kids[1], model_free);
            break;
        case Tag::Uniform:
            register_fact(facts, sub(dist->kids[1], dist->kids[0]), model_free);
            break;
        default: break;
    }
}

// Density of a categorical at a point: exact matching with indicators.
ExprPtr categorical_density(const ExprPtr& cat, const ExprPtr& t) {
    ExprPtr num, den;
    for (std::size_t i = 0; i + 1 < cat->kids.size(); i += 2) {
        ExprPtr term = mul(cat->kids[i], eq_indicator(cat->kids[i + 1], t));
        num = num ? add(num, term) : term;
        den = den ? add(den, cat->kids[i]) : cat->kids[i];
    }
    if (!num) throw Unhandled("cannot observe an empty Categorical");
    return div(num, den);
}

ExprPtr beta_reduce_spine(ExprPtr m, NameSupply& supply) {
    while (m->tag == Tag::App && m->kids[0]->tag == Tag::Lam) {
        m = apply(m->kids[0], m->kids[1], supply);
    }
    return m;
}

ExprPtr fold_projections(const ExprPtr& e) {
    if (e->kids.empty()) return e;
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const auto& k : e->kids) {
        auto nk = fold_projections(k);
        changed |= nk != k;
        kids.push_back(std::move(nk));
    }
    ExprPtr r = changed ? with_kids(e, std::move(kids)) : e;
    if ((r->tag == Tag::Fst || r->tag == Tag::Snd) && r->kids[0]->tag == Tag::Pair) {
        return r->tag == Tag::Fst ? r->kids[0]->kids[0] : r->kids[0]->kids[1];
    }
    return r;
}

// ---------------- observation (Alg. 4 style) ----------------

ExprPtr observe_go(const ExprPtr& m0, const ExprPtr& t, NameSupply& supply, Assumptions* facts,
                   const std::set<Name>& model_free) {
    ExprPtr m = beta_reduce_spine(m0, supply);
    if (is_primitive_dist(m)) {
        register_dist_facts(facts, m, model_free);
        return weight(primitive_pdf(m, t, supply), t);
    }
    switch (m->tag) {
        case Tag::Categorical:
            return weight(categorical_density(m, t), t);
        case Tag::Bind: {
            Name x = m->name;
            ExprPtr body = m->kids[1];
            if (occurs_free(t, x)) {
                Name fresh = supply.fresh(x.text);
                body = substitute(body, x, var(fresh), supply);
                x = fresh;
            }
            return bind(x, m->kids[0], observe_go(body, t, supply, facts, model_free));
        }
        case Tag::Superpose: {
            std::vector<ExprPtr> flat;
            for (std::size_t i = 0; i + 1 < m->kids.size(); i += 2) {
                flat.push_back(m->kids[i]);
                flat.push_back(observe_go(m->kids[i + 1], t, supply, facts, model_free));
            }
            return superpose(std::move(flat));
        }
        case Tag::If:
            return if_(m->kids[0], observe_go(m->kids[1], t, supply, facts, model_free),
                       observe_go(m->kids[2], t, supply, facts, model_free));
        default:
            throw Unhandled("observe cannot handle this measure: " + pretty(m));
    }
}

// ---------------- branch lifting ----------------

bool is_multi_superpose(const ExprPtr& e) {
    return e->tag == Tag::Superpose && e->kids.size() > 2;
}

ExprPtr encode_if(const ExprPtr& e) {
    return superpose({if_(e->kids[0], lit(1), lit(0)), e->kids[1],
                      if_(e->kids[0], lit(0), lit(1)), e->kids[2]});
}

// Measures with branching below binds rewrite into a top-level mixture so
// each branch is a straight-line chain.
ExprPtr lift_branches(const ExprPtr& m0, NameSupply& supply, int fuel) {
    if (fuel <= 0) throw NotInvertible("branch structure too deep to disintegrate");
    ExprPtr m = beta_reduce_spine(m0, supply);
    switch (m->tag) {
        case Tag::If: return lift_branches(encode_if(m), supply, fuel - 1);
        case Tag::Superpose: {
            std::vector<ExprPtr> flat;
            for (std::size_t i = 0; i + 1 < m->kids.size(); i += 2) {
                flat.push_back(m->kids[i]);
                flat.push_back(lift_branches(m->kids[i + 1], supply, fuel - 1));
            }
            return superpose(std::move(flat));
        }
        case Tag::Bind: {
            ExprPtr rhs = lift_branches(m->kids[0], supply, fuel - 1);
            ExprPtr body = lift_branches(m->kids[1], supply, fuel - 1);
            if (is_multi_superpose(rhs)) {
                std::vector<ExprPtr> flat;
                for (std::size_t i = 0; i + 1 < rhs->kids.size(); i += 2) {
                    flat.push_back(lit(1));
                    flat.push_back(lift_branches(
                        bind(m->name, superpose({rhs->kids[i], rhs->kids[i + 1]}), body), supply,
                        fuel - 1));
                }
                return superpose(std::move(flat));
            }
            if (is_multi_superpose(body)) {
                std::vector<ExprPtr> flat;
                for (std::size_t i = 0; i + 1 < body->kids.size(); i += 2) {
                    flat.push_back(lit(1));
                    flat.push_back(lift_branches(
                        bind(m->name, rhs, superpose({body->kids[i], body->kids[i + 1]})), supply,
                        fuel - 1));
                }
                return superpose(std::move(flat));
            }
            return bind(m->name, rhs, body);
        }
        default: return m;
    }
}

// ---------------- straight-line disintegration ----------------

struct ChainEntry {
    Name var;
    ExprPtr rhs;
    bool consumed = false;
};

struct Inverter {
    NameSupply& supply;
    Assumptions* facts;
    const std::set<Name>& model_free;

    std::vector<ChainEntry> binds;
    std::vector<ExprPtr> factors;
    std::vector<ExprPtr> guards;  // domain conditions wrapping the weight
    std::map<Name, ExprPtr> sigma;  // consumed site -> inverted value

    explicit Inverter(NameSupply& s, Assumptions* f, const std::set<Name>& mf)
        : supply(s), facts(f), model_free(mf) {}

    ExprPtr subst(const ExprPtr& e) { return fold_projections(substitute(e, sigma, supply)); }

    // Collect the straight-line chain; returns the final Weight's point.
    // The final weight joins `factors`.
    ExprPtr collect(ExprPtr m) {
        int fuel = 10000;
        while (fuel-- > 0) {
            m = beta_reduce_spine(m, supply);
            if (m->tag == Tag::Bind) {
                ExprPtr rhs = beta_reduce_spine(m->kids[0], supply);
                if (rhs->tag == Tag::Bind) {
                    // reassociate, renaming to avoid capture
                    Name y = rhs->name;
                    ExprPtr inner = rhs->kids[1];
                    if (occurs_free(m->kids[1], y) || y == m->name) {
                        Name fresh = supply.fresh(y.text);
                        inner = substitute(inner, y, var(fresh), supply);
                        y = fresh;
                    }
                    m = bind(y, rhs->kids[0], bind(m->name, inner, m->kids[1]));
                    continue;
                }
                if (rhs->tag == Tag::Weight) {
                    factors.push_back(rhs->kids[0]);
                    m = substitute(m->kids[1], m->name, rhs->kids[1], supply);
                    continue;
                }
                if (rhs->tag == Tag::Superpose && rhs->kids.size() == 2) {
                    factors.push_back(rhs->kids[0]);
                    m = bind(m->name, rhs->kids[1], m->kids[1]);
                    continue;
                }
                binds.push_back(ChainEntry{m->name, rhs, false});
                m = m->kids[1];
                continue;
            }
            if (m->tag == Tag::Superpose && m->kids.size() == 2) {
                factors.push_back(m->kids[0]);
                m = m->kids[1];
                continue;
            }
            if (m->tag == Tag::Weight) {
                if (!is_lit(m->kids[0], Rational(1))) factors.push_back(m->kids[0]);
                return m->kids[1];
            }
            if (is_primitive_dist(m) || m->tag == Tag::Categorical) {
                throw NotPairMeasure("disintegrate requires a measure over pairs: " + pretty(m));
            }
            throw NotInvertible("disintegrate requires a bind chain ending in Dirac: " +
                                pretty(m));
        }
        throw NotInvertible("bind chain too long");
    }

    // Index of the latest unconsumed bind whose variable occurs in e.
    std::optional<std::size_t> latest_site(const ExprPtr& e) {
        for (std::size_t i = binds.size(); i-- > 0;) {
            if (!binds[i].consumed && occurs_free(e, binds[i].var)) return i;
        }
        return std::nullopt;
    }

    // Invert one observed component against the observation value `val`.
    void component(const ExprPtr& comp0, const ExprPtr& val) {
        ExprPtr comp = subst(comp0);
        if (comp->tag == Tag::Pair) {
            component(comp->kids[0], fst(val));
            component(comp->kids[1], snd(val));
            return;
        }
        auto site = latest_site(comp);
        if (!site) {
            // Deterministic component: exact matching.
            factors.push_back(eq_indicator(comp, val));
            return;
        }
        const Name& x = binds[*site].var;
        ExprPtr inv = val;
        ExprPtr g = comp;
        int fuel = 200;
        while (!(g->tag == Tag::Var && g->name == x)) {
            if (fuel-- <= 0) throw NotInvertible("observed expression too deep: " + pretty(comp));
            switch (g->tag) {
                case Tag::Add:
                    if (!occurs_free(g->kids[1], x)) {
                        inv = sub(inv, g->kids[1]);
                        g = g->kids[0];
                    } else if (!occurs_free(g->kids[0], x)) {
                        inv = sub(inv, g->kids[0]);
                        g = g->kids[1];
                    } else {
                        throw NotInvertible("observed sum mixes the site with itself: " +
                                            pretty(comp));
                    }
                    break;
                case Tag::Sub:
                    if (!occurs_free(g->kids[1], x)) {
                        inv = add(inv, g->kids[1]);
                        g = g->kids[0];
                    } else if (!occurs_free(g->kids[0], x)) {
                        inv = sub(g->kids[0], inv);
                        g = g->kids[1];
                    } else {
                        throw NotInvertible("observed difference mixes the site with itself");
                    }
                    break;
                case Tag::Neg:
                    inv = neg(inv);
                    g = g->kids[0];
                    break;
                case Tag::Mul: {
                    ExprPtr c = !occurs_free(g->kids[0], x) ? g->kids[0] : g->kids[1];
                    ExprPtr gg = !occurs_free(g->kids[0], x) ? g->kids[1] : g->kids[0];
                    if (occurs_free(c, x) || c->tag != Tag::Lit || c->lit == 0) {
                        throw NotInvertible("observed scaling must be a nonzero constant: " +
                                            pretty(comp));
                    }
                    inv = div(inv, c);
                    factors.push_back(lit(Rational(1) / abs(c->lit)));
                    g = gg;
                    break;
                }
                case Tag::Div: {
                    if (occurs_free(g->kids[1], x) || g->kids[1]->tag != Tag::Lit ||
                        g->kids[1]->lit == 0) {
                        throw NotInvertible("observed division must be by a nonzero constant");
                    }
                    inv = mul(inv, g->kids[1]);
                    factors.push_back(lit(abs(g->kids[1]->lit)));
                    g = g->kids[0];
                    break;
                }
                case Tag::Exp:
                    // y = exp(u): u = log y, weight 1/y, defined on y > 0.
                    // The guard wraps the whole weight so log never sees a
                    // nonpositive argument.
                    guards.push_back(less(lit(0), inv));
                    factors.push_back(div(lit(1), inv));
                    inv = log(inv);
                    g = g->kids[0];
                    break;
                case Tag::Log:
                    inv = exp(inv);
                    factors.push_back(inv);
                    g = g->kids[0];
                    break;
                default:
                    throw NotInvertible("observed expression is not in the invertible class: " +
                                        pretty(comp));
            }
        }

        // weight by the site's density at the inverted point
        ExprPtr rhs = subst(binds[*site].rhs);
        if (is_primitive_dist(rhs)) {
            register_dist_facts(facts, rhs, model_free);
            factors.push_back(primitive_pdf(rhs, inv, supply));
        } else if (rhs->tag == Tag::Categorical) {
            factors.push_back(categorical_density(rhs, inv));
        } else {
            throw NotInvertible("observed site is not a primitive distribution: " + pretty(rhs));
        }
        binds[*site].consumed = true;
        sigma[x] = inv;
    }

    // Assemble the sliced measure: remaining binds around the weighted
    // latent point.
    ExprPtr assemble(const ExprPtr& latent) {
        ExprPtr w;
        for (const auto& f : factors) {
            ExprPtr fs = subst(f);
            w = w ? mul(w, fs) : fs;
        }
        if (!w) w = lit(1);
        for (auto it = guards.rbegin(); it != guards.rend(); ++it) {
            w = if_(subst(*it), w, lit(0));
        }
        ExprPtr out = weight(w, subst(latent));
        for (std::size_t i = binds.size(); i-- > 0;) {
            if (binds[i].consumed) continue;
            out = bind(binds[i].var, subst(binds[i].rhs), out);
        }
        return out;
    }
};

ExprPtr disintegrate_go(const ExprPtr& m0, const ExprPtr& t, NameSupply& supply,
                        Assumptions* facts, const std::set<Name>& model_free) {
    ExprPtr m = beta_reduce_spine(m0, supply);
    if (m->tag == Tag::Superpose) {
        std::vector<ExprPtr> flat;
        for (std::size_t i = 0; i + 1 < m->kids.size(); i += 2) {
            flat.push_back(m->kids[i]);
            flat.push_back(disintegrate_go(m->kids[i + 1], t, supply, facts, model_free));
        }
        return superpose(std::move(flat));
    }
    Inverter inv(supply, facts, model_free);
    ExprPtr point = inv.collect(m);
    if (point->tag != Tag::Pair) {
        throw NotPairMeasure("disintegrate requires a measure over pairs, got point " +
                             pretty(point));
    }
    inv.component(point->kids[0], t);
    return inv.assemble(point->kids[1]);
}

}  // namespace

ExprPtr observe(const ExprPtr& m, const ExprPtr& t, NameSupply& supply, Assumptions* facts) {
    return observe_go(m, t, supply, facts, free_vars(m));
}

ExprPtr disintegrate(const ExprPtr& m, NameSupply& supply, Assumptions* facts) {
    std::set<Name> model_free = free_vars(m);
    ExprPtr lifted = lift_branches(m, supply, 64);
    Name t = supply.fresh("t");
    return lam(t, disintegrate_go(lifted, var(t), supply, facts, model_free));
}

ExprPtr density(const ExprPtr& m, const ExprPtr& t, NameSupply& supply, Assumptions* facts) {
    Name z = supply.fresh("z");
    ExprPtr wrapped = bind(z, m, dirac(pair(var(z), unit_e())));
    ExprPtr kernel = disintegrate(wrapped, supply, facts);
    ExprPtr applied = apply(kernel, t, supply);
    Name y = supply.fresh("y");
    return expect(applied, lam(y, lit(1)), supply);
}

}  // namespace probc
