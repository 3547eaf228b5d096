#ifndef PROBC_VALUE_HPP
#define PROBC_VALUE_HPP

#include <memory>
#include <string>
#include <variant>

#include "probc/expr.hpp"

namespace probc {

struct Value;
using ValuePtr = std::shared_ptr<const Value>;

// Persistent association list; extension shares the tail, so closures can
// capture an Env by value.
class Env {
public:
    Env() = default;

    Env extend(const Name& n, ValuePtr v) const {
        return Env(std::make_shared<Node>(Node{n, std::move(v), head_}));
    }
    const ValuePtr* lookup(const Name& n) const {
        for (const Node* p = head_.get(); p; p = p->next.get()) {
            if (p->name == n) return &p->value;
        }
        return nullptr;
    }

private:
    struct Node {
        Name name;
        ValuePtr value;
        std::shared_ptr<const Node> next;
    };
    explicit Env(std::shared_ptr<const Node> head) : head_(std::move(head)) {}
    std::shared_ptr<const Node> head_;
};

struct Closure {
    Name var;
    ExprPtr body;
    Env env;
};

struct Value {
    std::variant<double, bool, std::monostate, std::pair<ValuePtr, ValuePtr>, Closure> v;
};

ValuePtr make_real(double x);
ValuePtr make_bool(bool b);
ValuePtr make_unit();
ValuePtr make_pair(ValuePtr a, ValuePtr b);
ValuePtr make_closure(Name var, ExprPtr body, Env env);

bool is_real(const ValuePtr& v);
double as_real(const ValuePtr& v);  // throws EvalError if not a real
bool as_bool(const ValuePtr& v);
const std::pair<ValuePtr, ValuePtr>& as_pair(const ValuePtr& v);
const Closure& as_closure(const ValuePtr& v);

// Follows a dot path of 0/1 projections ("0.1" = first, then second).
ValuePtr project_path(const ValuePtr& v, const std::string& path);

std::string value_to_string(const ValuePtr& v);
// JSON encoding: real -> number, bool -> bool, unit -> null, pair -> [a, b].
std::string value_to_json(const ValuePtr& v);

// Embeds a data value back into the language (reals, pairs, unit only).
ExprPtr quote_value(const ValuePtr& v);

}  // namespace probc

#endif
