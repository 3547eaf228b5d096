#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "probc/eval.hpp"
#include "probc/parser.hpp"
#include "probc/printer.hpp"
#include "probc/sampler.hpp"
#include "probc/simplify.hpp"
#include "probc/type.hpp"

using namespace probc;

namespace {
SimplifyOptions assume_pos(std::initializer_list<std::string> vars) {
    SimplifyOptions o;
    for (const auto& v : vars) o.assume.positive_vars.insert(v);
    return o;
}
}  // namespace

TEST_CASE("common factors cancel under positivity") {
    NameSupply supply;
    auto e = parse("(a*b)/(a*c)", supply);
    auto s = simplify(e, supply, assume_pos({"a"}));
    CHECK(alpha_equal(s, parse("b/c")));
}

TEST_CASE("exp and log invert for positive arguments") {
    NameSupply supply;
    auto s = simplify(parse("exp(log(x))", supply), supply, assume_pos({"x"}));
    CHECK(alpha_equal(s, parse("x")));
    auto l = simplify(parse("log(exp(x))", supply), supply);
    CHECK(alpha_equal(l, parse("x")));
}

TEST_CASE("sqrt extraction uses positivity") {
    NameSupply supply;
    auto s = simplify(parse("sqrt(s^2 * t^2)", supply), supply, assume_pos({"s", "t"}));
    CHECK(alpha_equal(s, parse("s*t")));
    // without facts the square root stays put
    auto u = simplify(parse("sqrt(s^2)", supply), supply);
    CHECK(alpha_equal(u, parse("sqrt(s^2)")));
}

TEST_CASE("exponent arithmetic merges exp factors") {
    NameSupply supply;
    auto s = simplify(parse("exp(x) * exp(y) / exp(x)", supply), supply);
    CHECK(alpha_equal(s, parse("exp(y)")));
}

TEST_CASE("polynomial integrals close over finite bounds") {
    NameSupply supply;
    CHECK(alpha_equal(simplify(parse("Int(x, 3, y, 1)", supply), supply), parse("3 - x")));
    CHECK(alpha_equal(simplify(parse("Int(0, 2, x, 1)/(2-0)", supply), supply), parse("1")));
    // the uniform-uniform total mass reduces to 1 symbolically
    auto mass = parse("Int(0,2,x, Int(x,3,y, 1)/(3-x))/(2-0)", supply);
    CHECK(alpha_equal(simplify(mass, supply), parse("1")));
}

TEST_CASE("gaussian integrals close over the real line") {
    NameSupply supply;
    auto e = parse("Int(-inf, inf, x, exp(-(x-m)^2/(2*s^2)))", supply);
    auto s = simplify(e, supply, assume_pos({"s"}));
    // s*sqrt(2*pi)
    CHECK(simplify_equal(s, parse("s*sqrt(2*pi)"), supply, assume_pos({"s"})));
    // and numerically
    Env env = Env().extend(Name{"m", 0}, make_real(0.7)).extend(Name{"s", 0}, make_real(1.3));
    CHECK(eval_real(s, env) == doctest::Approx(1.3 * std::sqrt(2 * M_PI)));
}

TEST_CASE("gamma-type integrals close on the half line") {
    NameSupply supply;
    auto s = simplify(parse("Int(0, inf, x, x^2 * exp(-3*x))", supply), supply);
    CHECK(alpha_equal(s, parse("2/27")));
}

TEST_CASE("integrating out a latent normal gives the convolution") {
    NameSupply supply;
    auto m1 = parse("x <~ Normal(0, 1); Normal(x, 1)", supply);
    auto s1 = integrate_out(m1, supply);
    CHECK(alpha_equal(s1, parse("Normal(0, sqrt(2))")));

    auto m2 = parse("x <~ Normal(a, s); Normal(x, t)", supply);
    auto s2 = integrate_out(m2, supply, assume_pos({"s", "t"}));
    CHECK(simplify_equal(s2, parse("Normal(a, sqrt(s^2+t^2))"), supply, assume_pos({"s", "t"})));
}

TEST_CASE("normal-normal density recognition matches the posterior") {
    NameSupply supply;
    // The disintegrated joint, normalized by hand with the marginal at y.
    const char* src =
        "x <~ Normal(a, s);"
        "Weight( (exp(-(y-x)^2/(2*t^2))/t/sqrt(2*pi))"
        "      / (exp(-(y-a)^2/(2*(s^2+t^2)))/sqrt(s^2+t^2)/sqrt(2*pi)), x )";
    auto m = parse(src, supply);
    auto out = recognize_density(m, supply, assume_pos({"s", "t"}));
    auto golden = parse("Normal( (y*s^2+a*t^2)/(s^2+t^2), s*t/sqrt(s^2+t^2) )");
    CAPTURE(pretty(out));
    CHECK(simplify_equal(out, golden, supply, assume_pos({"s", "t"})));
}

TEST_CASE("recognition is robust to expanding the polynomial") {
    NameSupply supply;
    const char* src =
        "x <~ Normal(a, s);"
        "Weight( (exp(-(y^2 - 2*y*x + x^2)/(2*t^2))/t/sqrt(2*pi))"
        "      / (exp(-(y-a)^2/(2*(s^2+t^2)))/sqrt(s^2+t^2)/sqrt(2*pi)), x )";
    auto m = parse(src, supply);
    auto out = recognize_density(m, supply, assume_pos({"s", "t"}));
    auto golden = parse("Normal( (y*s^2+a*t^2)/(s^2+t^2), s*t/sqrt(s^2+t^2) )");
    CHECK(simplify_equal(out, golden, supply, assume_pos({"s", "t"})));
}

TEST_CASE("a spelled-out standard normal density is recognized") {
    NameSupply supply;
    // Normal(0,1) written as a reweighted Normal(0,2) draw.
    const char* src =
        "x <~ Normal(0, 2);"
        "Weight( (exp(-x^2/2)/sqrt(2*pi)) / (exp(-x^2/(2*4))/2/sqrt(2*pi)), x )";
    auto m = parse(src, supply);
    auto out = recognize_density(m, supply);
    CHECK(simplify_equal(out, parse("Normal(0, 1)"), supply));
}

TEST_CASE("beta-bernoulli conjugacy is recognized") {
    NameSupply supply;
    auto m = parse("p <~ Beta(2, 3); Weight(p * p * (1 - p), p)", supply);
    auto out = recognize_density(m, supply);
    // x^2 (1-x) against Beta(2,3) gives Beta(4,4), scaled by its mass.
    REQUIRE(out->tag == Tag::Superpose);
    CHECK(out->kids.size() == 2);
    CHECK(alpha_equal(out->kids[1], parse("Beta(4, 4)")));
    // mass = 12 * B(4,4): exact rationals
    CHECK(alpha_equal(simplify(out->kids[0], supply), parse("3/35")));
}

TEST_CASE("gamma-poisson style reweighting is recognized") {
    NameSupply supply;
    auto m = parse("x <~ Gamma(2, 1); Weight(x * exp(-x), x)", supply);
    auto out = recognize_density(m, supply);
    REQUIRE(out->tag == Tag::Superpose);
    CHECK(alpha_equal(out->kids[1], parse("Gamma(3, 1/2)")));
    // mass = Gamma(3)/2^3 / Gamma(2) = 2/8
    CHECK(alpha_equal(simplify(out->kids[0], supply), parse("1/4")));
}

TEST_CASE("bind fusion and eta") {
    NameSupply supply;
    auto a = simplify(parse("x <~ Dirac(3); Normal(x, 1)", supply), supply);
    CHECK(alpha_equal(a, parse("Normal(3, 1)")));
    auto b = simplify(parse("x <~ Uniform(0, 1); Dirac(x)", supply), supply);
    CHECK(alpha_equal(b, parse("Uniform(0, 1)")));
    auto c = simplify(parse("x <~ Weight(0.7, 8); Dirac(x + 1)", supply), supply);
    CHECK(simplify_equal(c, parse("Weight(0.7, 9)"), supply));
}

TEST_CASE("normalizing a weighted point mass gives a dirac") {
    NameSupply supply;
    auto m = parse("x <~ Weight(0.7, 8); Weight(1/(7/10), x)", supply);
    CHECK(simplify_equal(m, parse("Dirac(8)"), supply));
}

TEST_CASE("binds distribute over superpose branches") {
    NameSupply supply;
    auto m = parse(
        "proposed <~ Superpose((1/2, n <~ Uniform(3, 8); Dirac((n, e0))),"
        "                      (1/2, n <~ Uniform(1, 4); Dirac((t0, n))));"
        "Dirac((proposed, 9))",
        supply);
    auto s = simplify(m, supply);
    REQUIRE(s->tag == Tag::Superpose);
    REQUIRE(s->kids.size() == 4);
    CHECK(is_lit(s->kids[0], Rational(1, 2)));
    CHECK(is_lit(s->kids[2], Rational(1, 2)));
    auto b1 = s->kids[1];
    REQUIRE(b1->tag == Tag::Bind);
    CHECK(b1->kids[0]->tag == Tag::Uniform);
    CHECK(is_dirac(b1->kids[1]));
}

TEST_CASE("discrete conditioning enumerates categorical outcomes") {
    NameSupply supply;
    auto m = parse("z <~ Categorical((1/2, 0), (1/2, 1)); Weight(If(z < 1/2, 2, 6), z)", supply);
    auto s = simplify(m, supply);
    REQUIRE(s->tag == Tag::Categorical);
    REQUIRE(s->kids.size() == 4);
    CHECK(alpha_equal(simplify(s->kids[0], supply), parse("1")));
    CHECK(alpha_equal(simplify(s->kids[2], supply), parse("3")));
}

TEST_CASE("simplify preserves types and is a fixpoint") {
    NameSupply supply;
    const char* sources[] = {
        "x <~ Uniform(0, 2); Uniform(x, 3)",
        "x <~ Normal(0, 1); Normal(x, 1)",
        "x <~ Normal(0, 1); y <~ Normal(x, 1); Dirac((x, y))",
        "Superpose((2, Dirac(0)), (6, Dirac(1)))",
        "x <~ Gamma(2, 1); Weight(x * exp(-x), x)",
        "Int(0,2,x, Int(x,3,y, y)/(3-x))/(2-0)",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        auto e = parse(src, supply);
        auto s1 = simplify(e, supply);
        auto s2 = simplify(s1, supply);
        CHECK(alpha_equal(s1, s2));
        CHECK(type_shape_equal(typecheck(e), typecheck(s1)));
    }
}

TEST_CASE("simplify preserves measure semantics on weighted draws") {
    NameSupply supply;
    const char* sources[] = {
        "x <~ Uniform(0, 2); Uniform(x, 3)",
        "x <~ Normal(0, 1); Normal(x, 1)",
        "Superpose((2, Dirac(0)), (6, Dirac(1)))",
        "x <~ Weight(0.7, 8); Dirac(x + 1)",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        auto m = parse(src, supply);
        auto s = simplify(m, supply);
        // Weighted MC means agree within 4 standard errors.
        auto run = [&](const ExprPtr& prog, std::uint64_t seed) {
            Rng rng(seed);
            double wsum = 0, fsum = 0, f2 = 0;
            const int n = 40000;
            for (int i = 0; i < n; ++i) {
                auto [v, w] = sample(prog, {}, rng);
                double x = as_real(v);
                wsum += w;
                fsum += w * x;
                f2 += w * x * x;
            }
            double mean = fsum / wsum;
            double var = std::max(1e-12, f2 / wsum - mean * mean);
            return std::pair<double, double>(mean, std::sqrt(var / n));
        };
        auto [m1, se1] = run(m, 11);
        auto [m2, se2] = run(s, 12);
        CHECK(std::fabs(m1 - m2) <= 4 * std::hypot(se1, se2));
    }
}

TEST_CASE("rewrite traces replay to the output") {
    NameSupply supply;
    const char* sources[] = {
        "x <~ Normal(0, 1); Normal(x, 1)",
        "x <~ Dirac(3); Normal(x, 1)",
        "(a*b)/(a*c)",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        auto e = parse(src, supply);
        RewriteTrace trace;
        SimplifyOptions opts = assume_pos({"a"});
        opts.trace = &trace;
        auto out = simplify(e, supply, opts);
        CHECK(alpha_equal(replay_trace(e, trace), out));
        CHECK(!trace.to_json().empty());
    }
}

TEST_CASE("the step budget bounds rewriting") {
    NameSupply supply;
    auto e = parse("x <~ Normal(0, 1); Normal(x, 1)", supply);
    SimplifyOptions opts;
    opts.budget = 0;
    CHECK(alpha_equal(simplify(e, supply, opts), e));
}
