#ifndef PROBC_TYPE_HPP
#define PROBC_TYPE_HPP

#include <map>
#include <memory>
#include <string>

#include "probc/expr.hpp"

namespace probc {

enum class TypeKind { Real, NonNegReal, Bool, Unit, Pair, Fn, Measure };

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
    TypeKind kind;
    TypePtr a, b;  // Pair/Fn use both, Measure uses a

    static TypePtr real();
    static TypePtr nonneg();
    static TypePtr boolean();
    static TypePtr unit();
    static TypePtr pair(TypePtr x, TypePtr y);
    static TypePtr fn(TypePtr arg, TypePtr res);
    static TypePtr measure(TypePtr inner);

    std::string to_string() const;
};

// Exact equality (NonNegReal distinct from Real).
bool type_equal(const TypePtr& x, const TypePtr& y);
// Equality up to the NonNegReal <= Real refinement.
bool type_shape_equal(const TypePtr& x, const TypePtr& y);

bool is_real_like(const TypePtr& t);

using TypeCtx = std::map<Name, TypePtr>;

// Infers the unique type of `e` under `ctx`, which must cover its free
// variables. Unconstrained type variables default to Real. Throws
// UnboundVariable or TypeError (with a child-index path to the offending
// subterm).
TypePtr typecheck(const ExprPtr& e, const TypeCtx& ctx = {});

}  // namespace probc

#endif
