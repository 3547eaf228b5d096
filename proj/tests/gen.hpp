#ifndef PROBC_TESTS_GEN_HPP
#define PROBC_TESTS_GEN_HPP

#include <random>
#include <vector>

#include "probc/expr.hpp"

namespace probc::testgen {

// Random well-formed terms for property tests. Terms are structurally valid
// (and mostly well-typed) but not necessarily safely evaluable; use the
// `safe_*` variants when a test needs to run eval or the sampler.
class Gen {
public:
    explicit Gen(std::uint32_t seed) : rng_(seed) {}

    ExprPtr scalar(int depth, std::vector<Name> scope = {}) { return gen_scalar(depth, scope); }
    ExprPtr boolean(int depth, std::vector<Name> scope = {}) { return gen_bool(depth, scope); }
    ExprPtr measure(int depth, std::vector<Name> scope = {}) { return gen_measure(depth, scope); }

    // Any term from the full grammar: scalars, booleans, pairs, functions,
    // measures. Exercises the parser/printer and alpha machinery.
    ExprPtr term(int depth) {
        std::vector<Name> scope;
        switch (pick(4)) {
            case 0: return gen_scalar(depth, scope);
            case 1: return gen_bool(depth, scope);
            case 2: return gen_measure(depth, scope);
            default: {
                Name x = name();
                scope.push_back(x);
                return lam(x, gen_scalar(depth - 1, scope));
            }
        }
    }

    // Scalar terms restricted to operations that cannot throw at eval time
    // given real-valued variables in [lo, hi].
    ExprPtr safe_scalar(int depth, const std::vector<Name>& scope) {
        if (depth <= 0 || pick(3) == 0) {
            if (!scope.empty() && pick(2) == 0) return var(scope[pick(scope.size())]);
            return lit(Rational(static_cast<long>(pick(9)) - 4));
        }
        switch (pick(4)) {
            case 0: return add(safe_scalar(depth - 1, scope), safe_scalar(depth - 1, scope));
            case 1: return sub(safe_scalar(depth - 1, scope), safe_scalar(depth - 1, scope));
            case 2: return mul(safe_scalar(depth - 1, scope), safe_scalar(depth - 1, scope));
            default: return neg(safe_scalar(depth - 1, scope));
        }
    }

    Name name() {
        static const char* pool[] = {"x", "y", "z", "w", "u", "v"};
        return Name{pool[pick(6)], 0};
    }

    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

private:
    ExprPtr gen_scalar(int depth, std::vector<Name>& scope) {
        if (depth <= 0 || pick(4) == 0) return leaf(scope);
        switch (pick(12)) {
            case 0: return add(gen_scalar(depth - 1, scope), gen_scalar(depth - 1, scope));
            case 1: return sub(gen_scalar(depth - 1, scope), gen_scalar(depth - 1, scope));
            case 2: return mul(gen_scalar(depth - 1, scope), gen_scalar(depth - 1, scope));
            case 3: return div(gen_scalar(depth - 1, scope), gen_scalar(depth - 1, scope));
            case 4: return neg(gen_scalar(depth - 1, scope));
            case 5: return exp(gen_scalar(depth - 1, scope));
            case 6: return log(gen_scalar(depth - 1, scope));
            case 7: return sqrt(gen_scalar(depth - 1, scope));
            case 8: return pow(gen_scalar(depth - 1, scope), lit(static_cast<long>(pick(4))));
            case 9:
                return if_(gen_bool(depth - 1, scope), gen_scalar(depth - 1, scope),
                           gen_scalar(depth - 1, scope));
            case 10: {
                Name x = name();
                auto lo = gen_scalar(depth - 1, scope);
                auto hi = gen_scalar(depth - 1, scope);
                scope.push_back(x);
                auto body = gen_scalar(depth - 1, scope);
                scope.pop_back();
                return pick(2) == 0 ? integral(lo, hi, x, body) : sum(lo, hi, x, body);
            }
            default: {
                Name x = name();
                scope.push_back(x);
                auto body = gen_scalar(depth - 1, scope);
                scope.pop_back();
                return app(lam(x, body), gen_scalar(depth - 1, scope));
            }
        }
    }

    ExprPtr leaf(std::vector<Name>& scope) {
        if (!scope.empty() && pick(2) == 0) return var(scope[pick(scope.size())]);
        switch (pick(5)) {
            case 0: return lit(Rational(static_cast<long>(pick(19)) - 9));
            case 1: return lit(Rational(static_cast<long>(pick(9)) + 1, static_cast<long>(pick(9)) + 1));
            case 2: return constant(SymConst::Pi);
            default: return lit(Rational(static_cast<long>(pick(5))));
        }
    }

    ExprPtr gen_bool(int depth, std::vector<Name>& scope) {
        if (depth <= 1 || pick(2) == 0) {
            return less(gen_scalar(depth - 1, scope), gen_scalar(depth - 1, scope));
        }
        return chain_and(less(gen_scalar(depth - 1, scope), gen_scalar(depth - 1, scope)),
                         gen_bool(depth - 1, scope));
    }

    ExprPtr gen_measure(int depth, std::vector<Name>& scope) {
        if (depth <= 0 || pick(4) == 0) {
            switch (pick(4)) {
                case 0: return uniform(gen_scalar(0, scope), gen_scalar(0, scope));
                case 1: return normal(gen_scalar(0, scope), gen_scalar(0, scope));
                case 2: return weight(lit(Rational(static_cast<long>(pick(4)) + 1, 2)),
                                      gen_scalar(0, scope));
                default: return dirac(gen_scalar(0, scope));
            }
        }
        switch (pick(4)) {
            case 0: {
                Name x = name();
                auto rhs = gen_measure(depth - 1, scope);
                scope.push_back(x);
                auto body = gen_measure(depth - 1, scope);
                scope.pop_back();
                return bind(x, rhs, body);
            }
            case 1: {
                std::vector<ExprPtr> flat;
                std::size_t n = pick(3) + 1;
                for (std::size_t i = 0; i < n; ++i) {
                    flat.push_back(lit(Rational(static_cast<long>(pick(4)) + 1, 2)));
                    flat.push_back(gen_measure(depth - 1, scope));
                }
                return superpose(std::move(flat));
            }
            case 2: {
                std::vector<ExprPtr> flat;
                std::size_t n = pick(3) + 1;
                for (std::size_t i = 0; i < n; ++i) {
                    flat.push_back(lit(Rational(static_cast<long>(pick(4)) + 1, 2)));
                    flat.push_back(gen_scalar(0, scope));
                }
                return categorical(std::move(flat));
            }
            default:
                return if_(gen_bool(depth - 1, scope), gen_measure(depth - 1, scope),
                           gen_measure(depth - 1, scope));
        }
    }

    std::mt19937 rng_;
};

}  // namespace probc::testgen

#endif
