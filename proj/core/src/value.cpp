#include "probc/value.hpp"

#include <cmath>
#include <sstream>

#include "probc/errors.hpp"

namespace probc {

ValuePtr make_real(double x) { return std::make_shared<Value>(Value{x}); }
ValuePtr make_bool(bool b) { return std::make_shared<Value>(Value{b}); }
ValuePtr make_unit() { return std::make_shared<Value>(Value{std::monostate{}}); }
ValuePtr make_pair(ValuePtr a, ValuePtr b) {
    return std::make_shared<Value>(Value{std::make_pair(std::move(a), std::move(b))});
}
ValuePtr make_closure(Name var, ExprPtr body, Env env) {
    return std::make_shared<Value>(Value{Closure{std::move(var), std::move(body), std::move(env)}});
}

bool is_real(const ValuePtr& v) { return std::holds_alternative<double>(v->v); }

double as_real(const ValuePtr& v) {
    if (auto* d = std::get_if<double>(&v->v)) return *d;
    throw EvalError("expected a real value, got " + value_to_string(v));
}
bool as_bool(const ValuePtr& v) {
    if (auto* b = std::get_if<bool>(&v->v)) return *b;
    throw EvalError("expected a boolean value, got " + value_to_string(v));
}
const std::pair<ValuePtr, ValuePtr>& as_pair(const ValuePtr& v) {
    if (auto* p = std::get_if<std::pair<ValuePtr, ValuePtr>>(&v->v)) return *p;
    throw EvalError("expected a pair, got " + value_to_string(v));
}
const Closure& as_closure(const ValuePtr& v) {
    if (auto* c = std::get_if<Closure>(&v->v)) return *c;
    throw EvalError("expected a function, got " + value_to_string(v));
}

ValuePtr project_path(const ValuePtr& v, const std::string& path) {
    ValuePtr cur = v;
    for (std::size_t i = 0; i < path.size(); ++i) {
        char c = path[i];
        if (c == '.') continue;
        if (c != '0' && c != '1') throw ValidationError("bad projection path: " + path);
        const auto& p = as_pair(cur);
        cur = c == '0' ? p.first : p.second;
    }
    return cur;
}

namespace {
void render(const ValuePtr& v, std::ostringstream& os, bool json) {
    if (auto* d = std::get_if<double>(&v->v)) {
        os.precision(17);
        os << *d;
    } else if (auto* b = std::get_if<bool>(&v->v)) {
        os << (*b ? "true" : "false");
    } else if (std::holds_alternative<std::monostate>(v->v)) {
        os << (json ? "null" : "Unit");
    } else if (auto* p = std::get_if<std::pair<ValuePtr, ValuePtr>>(&v->v)) {
        os << (json ? "[" : "(");
        render(p->first, os, json);
        os << ", ";
        render(p->second, os, json);
        os << (json ? "]" : ")");
    } else {
        if (json) throw EvalError("closures have no JSON encoding");
        os << "<closure>";
    }
}
}  // namespace

std::string value_to_string(const ValuePtr& v) {
    std::ostringstream os;
    render(v, os, false);
    return os.str();
}

std::string value_to_json(const ValuePtr& v) {
    std::ostringstream os;
    render(v, os, true);
    return os.str();
}

ExprPtr quote_value(const ValuePtr& v) {
    if (auto* d = std::get_if<double>(&v->v)) return lit(rational_from_double(*d));
    if (std::holds_alternative<std::monostate>(v->v)) return unit_e();
    if (auto* p = std::get_if<std::pair<ValuePtr, ValuePtr>>(&v->v)) {
        return pair(quote_value(p->first), quote_value(p->second));
    }
    throw EvalError("cannot quote " + value_to_string(v));
}

}  // namespace probc
