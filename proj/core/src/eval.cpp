#include "probc/eval.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "probc/errors.hpp"

namespace probc {

namespace {

double simpson(double fa, double fm, double fb, double a, double b) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double b, double fb,
             double m, double fm, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(fa, flm, fm, a, m);
    double right = simpson(fm, frm, fb, m, b);
    double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    // An integrable jump pins refinement to a shrinking interval whose
    // contribution is bounded by |f| * width; accept it.
    if (b - a <= 1e-12 * (std::fabs(a) + std::fabs(b) + 1.0)) {
        return left + right + delta / 15.0;
    }
    if (depth <= 0) {
        throw QuadratureFailure("quadrature tolerance not met on [" + std::to_string(a) + ", " +
                                std::to_string(b) + "]");
    }
    return adapt(f, a, fa, m, fm, lm, flm, left, std::max(0.5 * tol, 1e-17), depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, std::max(0.5 * tol, 1e-17), depth - 1);
}

double integrate_finite(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = simpson(fa, fm, fb, a, b);
    return adapt(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 int max_depth) {
    bool lo_inf = std::isinf(a), hi_inf = std::isinf(b);
    if (!lo_inf && !hi_inf) return integrate_finite(f, a, b, abs_tol, max_depth);
    if (lo_inf && hi_inf) {
        // x = t/(1-t^2) maps (-1,1) onto the real line.
        auto g = [&f](double t) {
            double d = 1.0 - t * t;
            if (d <= 0.0) return 0.0;
            double x = t / d;
            return f(x) * (1.0 + t * t) / (d * d);
        };
        return integrate_finite(g, -1.0, 1.0, abs_tol, max_depth);
    }
    if (hi_inf) {
        // x = a + t/(1-t) maps [0,1) onto [a, inf).
        auto g = [&f, a](double t) {
            double d = 1.0 - t;
            if (d <= 0.0) return 0.0;
            return f(a + t / d) / (d * d);
        };
        return integrate_finite(g, 0.0, 1.0, abs_tol, max_depth);
    }
    auto g = [&f, b](double t) {
        double d = 1.0 - t;
        if (d <= 0.0) return 0.0;
        return f(b - t / d) / (d * d);
    };
    return integrate_finite(g, 0.0, 1.0, abs_tol, max_depth);
}

namespace {

constexpr double kQuadTol = 1e-8;
constexpr int kQuadDepth = 50;
constexpr double kSumBudget = 5e7;

double check_finite(double x, const char* what) {
    if (std::isnan(x)) throw EvalError(std::string("domain error in ") + what);
    return x;
}

ValuePtr eval_node(const ExprPtr& e, const Env& env);

double real_of(const ExprPtr& e, const Env& env) { return as_real(eval_node(e, env)); }

ValuePtr eval_node(const ExprPtr& e, const Env& env) {
    switch (e->tag) {
        case Tag::Var: {
            const ValuePtr* v = env.lookup(e->name);
            if (!v) throw EvalError("unbound variable '" + e->name.text + "'");
            return *v;
        }
        case Tag::Lit: return make_real(to_double(e->lit));
        case Tag::Const:
            return make_real(e->sym == SymConst::Pi ? M_PI : std::exp(1.0));
        case Tag::Infinity:
            return make_real(e->negative ? -std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::infinity());
        case Tag::UnitE: return make_unit();
        case Tag::Neg: return make_real(-real_of(e->kids[0], env));
        case Tag::Add: return make_real(real_of(e->kids[0], env) + real_of(e->kids[1], env));
        case Tag::Sub: return make_real(real_of(e->kids[0], env) - real_of(e->kids[1], env));
        case Tag::Mul: return make_real(real_of(e->kids[0], env) * real_of(e->kids[1], env));
        case Tag::Div: {
            double num = real_of(e->kids[0], env);
            double den = real_of(e->kids[1], env);
            if (den == 0.0) throw EvalError("division by zero");
            return make_real(num / den);
        }
        case Tag::Pow: {
            double b = real_of(e->kids[0], env);
            double x = real_of(e->kids[1], env);
            return make_real(check_finite(std::pow(b, x), "pow"));
        }
        case Tag::Less:
            return make_bool(real_of(e->kids[0], env) < real_of(e->kids[1], env));
        case Tag::Exp: return make_real(std::exp(real_of(e->kids[0], env)));
        case Tag::Log: {
            double x = real_of(e->kids[0], env);
            if (x <= 0.0) throw EvalError("log of a non-positive number");
            return make_real(std::log(x));
        }
        case Tag::Sqrt: {
            double x = real_of(e->kids[0], env);
            if (x < 0.0) throw EvalError("sqrt of a negative number");
            return make_real(std::sqrt(x));
        }
        case Tag::If:
            return as_bool(eval_node(e->kids[0], env)) ? eval_node(e->kids[1], env)
                                                       : eval_node(e->kids[2], env);
        case Tag::Sum: {
            double lo = real_of(e->kids[0], env);
            double hi = real_of(e->kids[1], env);
            if (!std::isfinite(lo) || !std::isfinite(hi)) {
                throw EvalError("Sum requires finite bounds");
            }
            long l = std::lround(lo), h = std::lround(hi);
            if (std::fabs(lo - l) > 1e-9 || std::fabs(hi - h) > 1e-9) {
                throw EvalError("Sum bounds must be integers");
            }
            if (h - l > kSumBudget) throw EvalError("Sum range too large");
            double acc = 0.0;
            for (long k = l; k <= h; ++k) {
                acc += as_real(eval_node(e->kids[2], env.extend(e->name, make_real(k))));
            }
            return make_real(acc);
        }
        case Tag::Int: {
            double lo = real_of(e->kids[0], env);
            double hi = real_of(e->kids[1], env);
            auto f = [&](double x) {
                return as_real(eval_node(e->kids[2], env.extend(e->name, make_real(x))));
            };
            return make_real(integrate(f, lo, hi, kQuadTol, kQuadDepth));
        }
        case Tag::Lam: return make_closure(e->name, e->kids[0], env);
        case Tag::App: {
            ValuePtr fv = eval_node(e->kids[0], env);
            const Closure& c = as_closure(fv);
            ValuePtr arg = eval_node(e->kids[1], env);
            return eval_node(c.body, c.env.extend(c.var, std::move(arg)));
        }
        case Tag::Pair:
            return make_pair(eval_node(e->kids[0], env), eval_node(e->kids[1], env));
        case Tag::Fst: return as_pair(eval_node(e->kids[0], env)).first;
        case Tag::Snd: return as_pair(eval_node(e->kids[0], env)).second;
        default:
            throw NonMeasure("cannot evaluate a measure expression deterministically; "
                             "use the sampler");
    }
}

}  // namespace

ValuePtr eval(const ExprPtr& e, const Env& env) { return eval_node(e, env); }

double eval_real(const ExprPtr& e, const Env& env) { return as_real(eval(e, env)); }

}  // namespace probc
