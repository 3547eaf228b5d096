#include <doctest.h>

#include <cmath>

#include "probc/errors.hpp"
#include "probc/eval.hpp"
#include "probc/expect.hpp"
#include "probc/parser.hpp"
#include "probc/sampler.hpp"
#include "probc/type.hpp"

using namespace probc;

namespace {
bool measure_free(const ExprPtr& e) {
    if (e->is_measure_tag()) return false;
    for (const auto& k : e->kids) {
        if (!measure_free(k)) return false;
    }
    return true;
}
}  // namespace

TEST_CASE("uniform-uniform expectation matches the published output exactly") {
    NameSupply supply;
    auto m = parse("x <~ Uniform(0, 2); Uniform(x, 3)", supply);
    auto f = parse("Lam(y, y)", supply);
    auto e = expect(m, f, supply);
    CHECK(alpha_equal(e, parse("Int(0,2,x, Int(x,3,y, y)/(3-x))/(2-0)")));
    CHECK(std::fabs(eval_real(e) - 2.0) <= 1e-6);
}

TEST_CASE("total mass of a point mass") {
    NameSupply supply;
    auto e = expect(parse("Dirac(5)", supply), parse("Lam(x, 1)", supply), supply);
    CHECK(eval_real(e) == 1.0);
    CHECK(alpha_equal(e, mul(lit(1), lit(1))));
}

TEST_CASE("superpose expectation is the weighted sum of atoms") {
    NameSupply supply;
    auto m = parse("Superpose((0.3, Dirac(1)), (0.2, Dirac(4)))", supply);
    auto f = parse("Lam(x, x)", supply);
    // enumeration oracle over the two atoms
    double oracle = 0.3 * 1 + 0.2 * 4;
    CHECK(eval_real(expect(m, f, supply)) == doctest::Approx(oracle));
}

TEST_CASE("categorical expectations normalize") {
    NameSupply supply;
    auto m = parse("Categorical((1, 10), (3, 20))", supply);
    auto f = parse("Lam(x, x)", supply);
    CHECK(eval_real(expect(m, f, supply)) == doctest::Approx(17.5));
}

TEST_CASE("expect output contains no measure constructs and types as Real") {
    NameSupply supply;
    const char* models[] = {
        "x <~ Uniform(0, 2); Uniform(x, 3)",
        "Normal(0, 1)",
        "x <~ Normal(0, 1); Dirac(x * 2)",
        "If(0<1, Dirac(3), Uniform(0, 1))",
        "Superpose((1/2, Gamma(2, 1)), (1/2, Beta(2, 3)))",
    };
    for (const char* src : models) {
        CAPTURE(src);
        auto e = expect(parse(src, supply), parse("Lam(v, v + 1)", supply), supply);
        CHECK(measure_free(e));
        CHECK(type_shape_equal(typecheck(e), Type::real()));
    }
}

TEST_CASE("expectation is linear") {
    NameSupply supply;
    auto m = parse("x <~ Uniform(0, 2); Uniform(x, 3)", supply);
    Name y{"y", 0};
    auto f = lam(y, var(y));
    auto g = lam(y, mul(var(y), var(y)));
    double a = 3, b = -2;
    auto combo = lam(y, add(mul(lit(3), var(y)), mul(lit(-2), mul(var(y), var(y)))));
    double lhs = eval_real(expect(m, combo, supply));
    double rhs = a * eval_real(expect(m, f, supply)) + b * eval_real(expect(m, g, supply));
    CHECK(std::fabs(lhs - rhs) <= 1e-6);
}

TEST_CASE("weighted Monte Carlo agrees with expect") {
    NameSupply supply;
    auto m = parse("x <~ Uniform(0, 2); Uniform(x, 3)", supply);
    auto f = parse("Lam(y, y)", supply);
    double want = eval_real(expect(m, f, supply));

    Rng rng(17);
    const int n = 100000;
    double wsum = 0, fsum = 0, f2sum = 0;
    for (int i = 0; i < n; ++i) {
        auto [v, w] = sample(m, {}, rng);
        double fv = as_real(v);
        wsum += w;
        fsum += w * fv;
        f2sum += w * fv * fv;
    }
    double mean = fsum / wsum;
    double variance = f2sum / wsum - mean * mean;
    double se = std::sqrt(variance / n);
    CHECK(std::fabs(mean - want) <= 4 * se);
}

TEST_CASE("expect avoids capturing integrand variables") {
    NameSupply supply;
    // f mentions a free x that must stay distinct from the model's bind.
    Name x{"x", 0}, y{"y", 0};
    auto m = parse("x <~ Uniform(0, 2); Uniform(x, 3)", supply);
    auto f = lam(y, add(var(y), var(x)));
    auto e = expect(m, f, supply);
    CHECK(free_vars(e).count(x) == 1);
    Env env = Env().extend(x, make_real(10.0));
    CHECK(std::fabs(eval_real(e, env) - 12.0) <= 1e-6);
}

TEST_CASE("opaque measures are unsupported") {
    NameSupply supply;
    Name m{"m", 0};
    CHECK_THROWS_AS(expect(var(m), parse("Lam(x, 1)", supply), supply), Unsupported);
}
