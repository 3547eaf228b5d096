#include "probc/mcmc.hpp"

#include <functional>
#include <optional>

#include "probc/disintegrate.hpp"
#include "probc/errors.hpp"
#include "probc/normalize.hpp"
#include "probc/printer.hpp"

namespace probc {

namespace {

TypePtr try_state_type(const ExprPtr& target, const TypeCtx& ctx) {
    try {
        TypePtr t = typecheck(target, ctx);
        if (t->kind == TypeKind::Measure) return t->a;
    } catch (const TypeError&) {
        // free hyperparameters without declared types
    }
    return nullptr;
}

}  // namespace

KernelProgram mh(const ExprPtr& proposal, const ExprPtr& target, NameSupply& supply,
                 Assumptions assume, const TypeCtx& ctx) {
    assume.merge(collect_program_facts(target));
    assume.merge(collect_program_facts(proposal));

    Name old_state = supply.fresh("old");
    Name new_state = supply.fresh("new");

    ExprPtr p_old, p_new, q_old_new, q_new_old;
    try {
        p_old = density(target, var(old_state), supply, &assume);
        p_new = density(target, var(new_state), supply, &assume);
    } catch (const NotInvertible& e) {
        throw NotInvertible(std::string("mh: target density failed: ") + e.what());
    }
    try {
        q_old_new = density(apply(proposal, var(new_state), supply), var(old_state), supply,
                            &assume);
        q_new_old = density(apply(proposal, var(old_state), supply), var(new_state), supply,
                            &assume);
    } catch (const NotInvertible& e) {
        throw NotInvertible(std::string("mh: proposal density failed: ") + e.what());
    }

    ExprPtr ratio = div(mul(p_new, q_old_new), mul(p_old, q_new_old));
    ExprPtr kernel = lam(old_state, bind(new_state, apply(proposal, var(old_state), supply),
                                         dirac(pair(var(new_state), ratio))));
    return KernelProgram{kernel, try_state_type(target, ctx), std::move(assume)};
}

namespace {

// Straightens a bind chain: returns the binds in order plus the final
// measure, fusing Weight/Dirac right-hand sides.
struct FlatChain {
    std::vector<std::pair<Name, ExprPtr>> binds;
    std::vector<ExprPtr> weights;
    ExprPtr final_measure;
};

FlatChain flatten_chain(ExprPtr m, NameSupply& supply) {
    FlatChain out;
    int fuel = 10000;
    while (fuel-- > 0) {
        while (m->tag == Tag::App && m->kids[0]->tag == Tag::Lam) {
            m = apply(m->kids[0], m->kids[1], supply);
        }
        if (m->tag == Tag::Bind) {
            ExprPtr rhs = m->kids[0];
            if (rhs->tag == Tag::Bind) {
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
                out.weights.push_back(rhs->kids[0]);
                m = substitute(m->kids[1], m->name, rhs->kids[1], supply);
                continue;
            }
            out.binds.push_back({m->name, rhs});
            m = m->kids[1];
            continue;
        }
        break;
    }
    out.final_measure = m;
    return out;
}

// Tuple paths: leaf variable -> projection path (0 = fst, 1 = snd).
void tuple_paths(const ExprPtr& t, std::vector<int>& path,
                 std::vector<std::pair<Name, std::vector<int>>>& out) {
    if (t->tag == Tag::Pair) {
        path.push_back(0);
        tuple_paths(t->kids[0], path, out);
        path.back() = 1;
        tuple_paths(t->kids[1], path, out);
        path.pop_back();
        return;
    }
    if (t->tag == Tag::Var) {
        out.push_back({t->name, path});
        return;
    }
    throw Unsupported("gibbs: the target must end in a tuple of its bound variables, got " +
                      pretty(t));
}

ExprPtr project(ExprPtr base, const std::vector<int>& path) {
    for (int p : path) base = p == 0 ? fst(std::move(base)) : snd(std::move(base));
    return base;
}

// Rebuilds the tuple shape with each leaf replaced via `leaf_of`.
ExprPtr rebuild_tuple(const ExprPtr& t, const std::function<ExprPtr(const Name&)>& leaf_of) {
    if (t->tag == Tag::Pair) {
        return pair(rebuild_tuple(t->kids[0], leaf_of), rebuild_tuple(t->kids[1], leaf_of));
    }
    return leaf_of(t->name);
}

}  // namespace

KernelProgram gibbs(const ExprPtr& target, NameSupply& supply, Assumptions assume,
                    const TypeCtx& ctx) {
    assume.merge(collect_program_facts(target));

    FlatChain chain = flatten_chain(target, supply);
    if (chain.final_measure->tag != Tag::Weight) {
        throw Unsupported("gibbs: the target must be a bind chain ending in Dirac of its "
                          "variable tuple");
    }
    ExprPtr tuple_expr = chain.final_measure->kids[1];
    std::vector<std::pair<Name, std::vector<int>>> leaves;
    std::vector<int> scratch;
    tuple_paths(tuple_expr, scratch, leaves);

    // every bound variable appears exactly once, in binding order
    std::map<Name, std::vector<int>> path_of;
    for (const auto& [n, p] : leaves) {
        if (!path_of.emplace(n, p).second) {
            throw Unsupported("gibbs: variable used twice in the target tuple");
        }
    }
    std::vector<Name> coords;
    for (const auto& [n, rhs] : chain.binds) {
        (void)rhs;
        if (path_of.count(n)) coords.push_back(n);
    }
    if (coords.size() < 2) {
        throw Unsupported("gibbs: need at least two scalar coordinates");
    }
    if (coords.size() != leaves.size()) {
        throw Unsupported("gibbs: the target tuple must consist of bound variables");
    }

    Name state = supply.fresh("s");
    Name zed = supply.fresh("z");
    std::size_t n = coords.size();

    std::vector<ExprPtr> choices;
    for (std::size_t i = 0; i < n; ++i) {
        try {
            // (x_{-i}, x_i) as projections of one draw from the target
            std::vector<ExprPtr> others_draw, others_state;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                others_draw.push_back(project(var(zed), path_of[coords[j]]));
                others_state.push_back(project(var(state), path_of[coords[j]]));
            }
            ExprPtr paired = bind(zed, target,
                                  dirac(pair(tuple(others_draw),
                                             project(var(zed), path_of[coords[i]]))));
            ExprPtr slice_fn = disintegrate(paired, supply, &assume);
            ExprPtr applied = apply(slice_fn, tuple(others_state), supply);
            ExprPtr conditional = normalize(applied, supply, assume);

            Name resampled = supply.fresh("new");
            ExprPtr next_state = rebuild_tuple(tuple_expr, [&](const Name& leaf) -> ExprPtr {
                if (leaf == coords[i]) return var(resampled);
                return project(var(state), path_of[leaf]);
            });
            choices.push_back(lit(Rational(1, static_cast<long>(n))));
            choices.push_back(bind(resampled, conditional, dirac(next_state)));
        } catch (const TransformError& e) {
            throw TransformError("gibbs: coordinate " + std::to_string(i) + " (" +
                                 coords[i].text + "): " + e.what());
        }
    }

    ExprPtr kernel = lam(state, superpose(std::move(choices)));
    return KernelProgram{kernel, try_state_type(target, ctx), std::move(assume)};
}

}  // namespace probc
