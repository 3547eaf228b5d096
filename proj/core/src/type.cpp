#include "probc/type.hpp"

#include <optional>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "probc/errors.hpp"

namespace probc {

TypePtr Type::real() {
    static TypePtr t = std::make_shared<Type>(Type{TypeKind::Real, nullptr, nullptr});
    return t;
}
TypePtr Type::nonneg() {
    static TypePtr t = std::make_shared<Type>(Type{TypeKind::NonNegReal, nullptr, nullptr});
    return t;
}
TypePtr Type::boolean() {
    static TypePtr t = std::make_shared<Type>(Type{TypeKind::Bool, nullptr, nullptr});
    return t;
}
TypePtr Type::unit() {
    static TypePtr t = std::make_shared<Type>(Type{TypeKind::Unit, nullptr, nullptr});
    return t;
}
TypePtr Type::pair(TypePtr x, TypePtr y) {
    return std::make_shared<Type>(Type{TypeKind::Pair, std::move(x), std::move(y)});
}
TypePtr Type::fn(TypePtr arg, TypePtr res) {
    return std::make_shared<Type>(Type{TypeKind::Fn, std::move(arg), std::move(res)});
}
TypePtr Type::measure(TypePtr inner) {
    return std::make_shared<Type>(Type{TypeKind::Measure, std::move(inner), nullptr});
}

std::string Type::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case TypeKind::Real: return "Real";
        case TypeKind::NonNegReal: return "NonNegReal";
        case TypeKind::Bool: return "Bool";
        case TypeKind::Unit: return "Unit";
        case TypeKind::Pair:
            os << "(" << a->to_string() << ", " << b->to_string() << ")";
            return os.str();
        case TypeKind::Fn:
            os << (a->kind == TypeKind::Fn ? "(" + a->to_string() + ")" : a->to_string())
               << " -> " << b->to_string();
            return os.str();
        case TypeKind::Measure:
            os << "Measure(" << a->to_string() << ")";
            return os.str();
    }
    return "?";
}

bool type_equal(const TypePtr& x, const TypePtr& y) {
    if (x->kind != y->kind) return false;
    if (x->a && !type_equal(x->a, y->a)) return false;
    if (x->b && !type_equal(x->b, y->b)) return false;
    return true;
}

bool type_shape_equal(const TypePtr& x, const TypePtr& y) {
    auto k = [](TypeKind kind) {
        return kind == TypeKind::NonNegReal ? TypeKind::Real : kind;
    };
    if (k(x->kind) != k(y->kind)) return false;
    if (x->a && !type_shape_equal(x->a, y->a)) return false;
    if (x->b && !type_shape_equal(x->b, y->b)) return false;
    return true;
}

bool is_real_like(const TypePtr& t) {
    return t->kind == TypeKind::Real || t->kind == TypeKind::NonNegReal;
}

namespace {

// Structural inference runs on a small union-find store; the NonNegReal
// refinement is a separate bottom-up pass afterwards.
enum class IKind { Var, Real, Bool, Unit, Pair, Fn, Measure };

struct INode {
    IKind kind = IKind::Var;
    int a = -1, b = -1;
    int link = -1;  // for Var: forwarding pointer once bound
};

class Infer {
public:
    int fresh() {
        nodes_.push_back(INode{});
        return static_cast<int>(nodes_.size()) - 1;
    }
    int mk(IKind k, int a = -1, int b = -1) {
        nodes_.push_back(INode{k, a, b, -1});
        return static_cast<int>(nodes_.size()) - 1;
    }
    int resolve(int i) {
        while (nodes_[i].kind == IKind::Var && nodes_[i].link >= 0) i = nodes_[i].link;
        return i;
    }
    bool occurs(int v, int t) {
        t = resolve(t);
        if (t == v) return true;
        const INode& n = nodes_[t];
        if (n.a >= 0 && occurs(v, n.a)) return true;
        if (n.b >= 0 && occurs(v, n.b)) return true;
        return false;
    }
    void unify(int x, int y, const std::string& path) {
        x = resolve(x);
        y = resolve(y);
        if (x == y) return;
        if (nodes_[x].kind == IKind::Var) {
            if (occurs(x, y)) throw TypeError("infinite type", path);
            nodes_[x].link = y;
            return;
        }
        if (nodes_[y].kind == IKind::Var) {
            unify(y, x, path);
            return;
        }
        if (nodes_[x].kind != nodes_[y].kind) {
            throw TypeError("type mismatch: " + describe(x) + " vs " + describe(y), path);
        }
        if (nodes_[x].a >= 0) unify(nodes_[x].a, nodes_[y].a, path);
        if (nodes_[x].b >= 0) unify(nodes_[x].b, nodes_[y].b, path);
    }
    std::string describe(int i) {
        i = resolve(i);
        switch (nodes_[i].kind) {
            case IKind::Var: return "?";
            case IKind::Real: return "Real";
            case IKind::Bool: return "Bool";
            case IKind::Unit: return "Unit";
            case IKind::Pair:
                return "(" + describe(nodes_[i].a) + ", " + describe(nodes_[i].b) + ")";
            case IKind::Fn:
                return describe(nodes_[i].a) + " -> " + describe(nodes_[i].b);
            case IKind::Measure: return "Measure(" + describe(nodes_[i].a) + ")";
        }
        return "?";
    }
    TypePtr to_public(int i) {
        i = resolve(i);
        switch (nodes_[i].kind) {
            case IKind::Var: return Type::real();  // unconstrained defaults to Real
            case IKind::Real: return Type::real();
            case IKind::Bool: return Type::boolean();
            case IKind::Unit: return Type::unit();
            case IKind::Pair: return Type::pair(to_public(nodes_[i].a), to_public(nodes_[i].b));
            case IKind::Fn: return Type::fn(to_public(nodes_[i].a), to_public(nodes_[i].b));
            case IKind::Measure: return Type::measure(to_public(nodes_[i].a));
        }
        return Type::real();
    }

    int from_public(const TypePtr& t) {
        switch (t->kind) {
            case TypeKind::Real:
            case TypeKind::NonNegReal: return mk(IKind::Real);
            case TypeKind::Bool: return mk(IKind::Bool);
            case TypeKind::Unit: return mk(IKind::Unit);
            case TypeKind::Pair: return mk(IKind::Pair, from_public(t->a), from_public(t->b));
            case TypeKind::Fn: return mk(IKind::Fn, from_public(t->a), from_public(t->b));
            case TypeKind::Measure: return mk(IKind::Measure, from_public(t->a));
        }
        return mk(IKind::Real);
    }

private:
    std::vector<INode> nodes_;
};

std::string child_path(const std::string& path, int i) {
    return path.empty() ? std::to_string(i) : path + "." + std::to_string(i);
}

struct Checker {
    Infer inf;
    std::unordered_map<const Expr*, int> node_of;

    // Literal sign analysis: weights that are provably negative are rejected.
    static bool definitely_negative(const ExprPtr& e) {
        if (e->tag == Tag::Lit) return e->lit < 0;
        if (e->tag == Tag::Neg && e->kids[0]->tag == Tag::Lit) return e->kids[0]->lit > 0;
        return false;
    }

    int walk(const ExprPtr& e, std::map<Name, int>& env, const std::string& path) {
        int r = walk_inner(e, env, path);
        node_of[e.get()] = r;
        return r;
    }

    int real() { return inf.mk(IKind::Real); }

    void expect_real(const ExprPtr& e, std::map<Name, int>& env, const std::string& path) {
        inf.unify(walk(e, env, path), real(), path);
    }

    int walk_inner(const ExprPtr& e, std::map<Name, int>& env, const std::string& path) {
        switch (e->tag) {
            case Tag::Var: {
                auto it = env.find(e->name);
                if (it == env.end()) {
                    throw UnboundVariable("unbound variable '" + e->name.text + "'", path);
                }
                return it->second;
            }
            case Tag::Lit:
            case Tag::Const:
            case Tag::Infinity: return real();
            case Tag::UnitE: return inf.mk(IKind::Unit);
            case Tag::Neg:
            case Tag::Exp:
            case Tag::Log:
            case Tag::Sqrt:
                expect_real(e->kids[0], env, child_path(path, 0));
                return real();
            case Tag::Add:
            case Tag::Sub:
            case Tag::Mul:
            case Tag::Div:
            case Tag::Pow:
                expect_real(e->kids[0], env, child_path(path, 0));
                expect_real(e->kids[1], env, child_path(path, 1));
                return real();
            case Tag::Less:
                expect_real(e->kids[0], env, child_path(path, 0));
                expect_real(e->kids[1], env, child_path(path, 1));
                return inf.mk(IKind::Bool);
            case Tag::If: {
                inf.unify(walk(e->kids[0], env, child_path(path, 0)), inf.mk(IKind::Bool),
                          child_path(path, 0));
                int t = walk(e->kids[1], env, child_path(path, 1));
                int f = walk(e->kids[2], env, child_path(path, 2));
                inf.unify(t, f, path);
                return t;
            }
            case Tag::Sum:
            case Tag::Int: {
                expect_real(e->kids[0], env, child_path(path, 0));
                expect_real(e->kids[1], env, child_path(path, 1));
                auto saved = env.find(e->name) != env.end()
                                 ? std::optional<int>(env[e->name])
                                 : std::nullopt;
                env[e->name] = real();
                expect_real(e->kids[2], env, child_path(path, 2));
                if (saved) env[e->name] = *saved;
                else env.erase(e->name);
                return real();
            }
            case Tag::Lam: {
                int arg = inf.fresh();
                auto saved = env.find(e->name) != env.end()
                                 ? std::optional<int>(env[e->name])
                                 : std::nullopt;
                env[e->name] = arg;
                int body = walk(e->kids[0], env, child_path(path, 0));
                if (saved) env[e->name] = *saved;
                else env.erase(e->name);
                return inf.mk(IKind::Fn, arg, body);
            }
            case Tag::App: {
                int f = walk(e->kids[0], env, child_path(path, 0));
                int a = walk(e->kids[1], env, child_path(path, 1));
                int res = inf.fresh();
                inf.unify(f, inf.mk(IKind::Fn, a, res), path);
                return res;
            }
            case Tag::Pair: {
                int a = walk(e->kids[0], env, child_path(path, 0));
                int b = walk(e->kids[1], env, child_path(path, 1));
                return inf.mk(IKind::Pair, a, b);
            }
            case Tag::Fst:
            case Tag::Snd: {
                int p = walk(e->kids[0], env, child_path(path, 0));
                int a = inf.fresh(), b = inf.fresh();
                inf.unify(p, inf.mk(IKind::Pair, a, b), path);
                return e->tag == Tag::Fst ? a : b;
            }
            case Tag::Uniform:
            case Tag::Normal:
            case Tag::Gamma:
            case Tag::Beta:
                expect_real(e->kids[0], env, child_path(path, 0));
                expect_real(e->kids[1], env, child_path(path, 1));
                return inf.mk(IKind::Measure, real());
            case Tag::Weight: {
                if (definitely_negative(e->kids[0])) {
                    throw TypeError("negative weight", child_path(path, 0));
                }
                expect_real(e->kids[0], env, child_path(path, 0));
                int p = walk(e->kids[1], env, child_path(path, 1));
                return inf.mk(IKind::Measure, p);
            }
            case Tag::Categorical:
            case Tag::Superpose: {
                int inner = inf.fresh();
                for (std::size_t i = 0; i + 1 < e->kids.size(); i += 2) {
                    if (definitely_negative(e->kids[i])) {
                        throw TypeError("negative branch weight",
                                        child_path(path, static_cast<int>(i)));
                    }
                    expect_real(e->kids[i], env, child_path(path, static_cast<int>(i)));
                    int b = walk(e->kids[i + 1], env, child_path(path, static_cast<int>(i + 1)));
                    if (e->tag == Tag::Categorical) {
                        inf.unify(b, inner, child_path(path, static_cast<int>(i + 1)));
                    } else {
                        inf.unify(b, inf.mk(IKind::Measure, inner),
                                  child_path(path, static_cast<int>(i + 1)));
                    }
                }
                return inf.mk(IKind::Measure, inner);
            }
            case Tag::Bind: {
                int rhs = walk(e->kids[0], env, child_path(path, 0));
                int inner = inf.fresh();
                inf.unify(rhs, inf.mk(IKind::Measure, inner), child_path(path, 0));
                auto saved = env.find(e->name) != env.end()
                                 ? std::optional<int>(env[e->name])
                                 : std::nullopt;
                env[e->name] = inner;
                int body = walk(e->kids[1], env, child_path(path, 1));
                if (saved) env[e->name] = *saved;
                else env.erase(e->name);
                int body_inner = inf.fresh();
                inf.unify(body, inf.mk(IKind::Measure, body_inner), child_path(path, 1));
                return body;
            }
        }
        throw TypeError("unhandled expression form", path);
    }
};

// Checks that +/-inf only appears directly in Int/Sum bound positions.
void check_infinity_positions(const ExprPtr& e, const std::string& path, bool bound_pos) {
    if (e->tag == Tag::Infinity) {
        if (!bound_pos) throw TypeError("infinity outside integration bounds", path);
        return;
    }
    bool bounds_here = e->tag == Tag::Int || e->tag == Tag::Sum;
    for (int i = 0; i < static_cast<int>(e->kids.size()); ++i) {
        check_infinity_positions(e->kids[i], child_path(path, i), bounds_here && i <= 1);
    }
}

// Bottom-up NonNegReal refinement over the resolved structural types.
struct Refiner {
    Checker& chk;

    TypePtr structural(const ExprPtr& e) { return chk.inf.to_public(chk.node_of.at(e.get())); }

    static bool nonneg_kind(const TypePtr& t) { return t->kind == TypeKind::NonNegReal; }

    TypePtr refine(const ExprPtr& e, std::map<Name, TypePtr>& env) {
        switch (e->tag) {
            case Tag::Var: {
                auto it = env.find(e->name);
                return it != env.end() ? it->second : structural(e);
            }
            case Tag::Lit: return e->lit >= 0 ? Type::nonneg() : Type::real();
            case Tag::Const: return Type::nonneg();
            case Tag::Infinity: return Type::real();
            case Tag::UnitE: return Type::unit();
            case Tag::Exp:
            case Tag::Sqrt:
                refine(e->kids[0], env);
                return Type::nonneg();
            case Tag::Neg:
            case Tag::Log:
            case Tag::Sub:
                for (const auto& k : e->kids) refine(k, env);
                return Type::real();
            case Tag::Add:
            case Tag::Mul:
            case Tag::Div:
            case Tag::Pow: {
                auto a = refine(e->kids[0], env);
                auto b = refine(e->kids[1], env);
                bool nn = nonneg_kind(a) && (e->tag == Tag::Pow || nonneg_kind(b));
                return nn ? Type::nonneg() : Type::real();
            }
            case Tag::Less:
                refine(e->kids[0], env);
                refine(e->kids[1], env);
                return Type::boolean();
            case Tag::If: {
                refine(e->kids[0], env);
                auto t = refine(e->kids[1], env);
                auto f = refine(e->kids[2], env);
                if (is_real_like(t) && is_real_like(f)) {
                    return nonneg_kind(t) && nonneg_kind(f) ? Type::nonneg() : Type::real();
                }
                return join(t, f);
            }
            case Tag::Sum:
            case Tag::Int: {
                refine(e->kids[0], env);
                refine(e->kids[1], env);
                auto saved = env;
                env[e->name] = Type::real();
                auto body = refine(e->kids[2], env);
                env = saved;
                return nonneg_kind(body) ? Type::nonneg() : Type::real();
            }
            case Tag::Lam: {
                auto fnty = structural(e);
                auto arg = fnty->kind == TypeKind::Fn ? fnty->a : Type::real();
                auto saved = env;
                env[e->name] = arg;
                auto body = refine(e->kids[0], env);
                env = saved;
                return Type::fn(arg, body);
            }
            case Tag::App: {
                auto f = refine(e->kids[0], env);
                refine(e->kids[1], env);
                return f->kind == TypeKind::Fn ? f->b : structural(e);
            }
            case Tag::Pair:
                return Type::pair(refine(e->kids[0], env), refine(e->kids[1], env));
            case Tag::Fst:
            case Tag::Snd: {
                auto p = refine(e->kids[0], env);
                if (p->kind == TypeKind::Pair) return e->tag == Tag::Fst ? p->a : p->b;
                return structural(e);
            }
            case Tag::Uniform:
            case Tag::Normal:
            case Tag::Gamma:
            case Tag::Beta:
                refine(e->kids[0], env);
                refine(e->kids[1], env);
                return Type::measure(Type::real());
            case Tag::Weight: {
                refine(e->kids[0], env);
                return Type::measure(refine(e->kids[1], env));
            }
            case Tag::Categorical:
            case Tag::Superpose: {
                TypePtr inner;
                for (std::size_t i = 0; i + 1 < e->kids.size(); i += 2) {
                    refine(e->kids[i], env);
                    auto b = refine(e->kids[i + 1], env);
                    if (e->tag == Tag::Superpose && b->kind == TypeKind::Measure) b = b->a;
                    inner = inner ? join(inner, b) : b;
                }
                if (!inner) inner = chk.inf.to_public(chk.node_of.at(e.get()))->a;
                return Type::measure(inner);
            }
            case Tag::Bind: {
                auto rhs = refine(e->kids[0], env);
                auto saved = env;
                env[e->name] = rhs->kind == TypeKind::Measure ? rhs->a : Type::real();
                auto body = refine(e->kids[1], env);
                env = saved;
                return body;
            }
        }
        return structural(e);
    }

    static TypePtr join(const TypePtr& x, const TypePtr& y) {
        if (is_real_like(x) && is_real_like(y)) {
            return (x->kind == TypeKind::NonNegReal && y->kind == TypeKind::NonNegReal)
                       ? Type::nonneg()
                       : Type::real();
        }
        if (x->kind != y->kind) return x;
        switch (x->kind) {
            case TypeKind::Pair: return Type::pair(join(x->a, y->a), join(x->b, y->b));
            case TypeKind::Fn: return Type::fn(join(x->a, y->a), join(x->b, y->b));
            case TypeKind::Measure: return Type::measure(join(x->a, y->a));
            default: return x;
        }
    }
};

}  // namespace

TypePtr typecheck(const ExprPtr& e, const TypeCtx& ctx) {
    check_infinity_positions(e, "", false);
    Checker chk;
    std::map<Name, int> env;
    std::map<Name, TypePtr> refine_env;
    for (const auto& [n, t] : ctx) {
        env[n] = chk.inf.from_public(t);
        refine_env[n] = t;
    }
    chk.walk(e, env, "");
    Refiner ref{chk};
    return ref.refine(e, refine_env);
}

}  // namespace probc
