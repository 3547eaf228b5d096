#include <doctest.h>

#include <cmath>

#include "probc/errors.hpp"
#include "probc/eval.hpp"
#include "probc/expect.hpp"
#include "probc/normalize.hpp"
#include "probc/parser.hpp"
#include "probc/printer.hpp"
#include "probc/sampler.hpp"

using namespace probc;

TEST_CASE("normalizing a weighted point mass gives a unit point mass") {
    NameSupply supply;
    auto out = normalize(parse("Weight(0.7, 8)", supply), supply);
    CHECK(simplify_equal(out, parse("Dirac(8)"), supply));
    Rng rng(1);
    auto [v, w] = sample(out, {}, rng);
    CHECK(as_real(v) == 8.0);
    CHECK(w == 1.0);
}

TEST_CASE("the normalized measure has unit total mass") {
    NameSupply supply;
    const char* sources[] = {
        "Weight(0.7, 8)",
        "x <~ Uniform(0, 2); Uniform(x, 3)",
        "Superpose((2, Dirac(0)), (6, Dirac(1)))",
        "x <~ Uniform(0, 2); Weight(If(x < 1, 2, 1), x)",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        auto out = normalize(parse(src, supply), supply);
        Name u{"u", 0};
        double mass = eval_real(expect(out, lam(u, lit(1)), supply));
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("normalize rejects the zero measure") {
    NameSupply supply;
    CHECK_THROWS_AS(normalize(parse("Weight(0, 5)", supply), supply), ZeroMass);
    CHECK_THROWS_AS(normalize(parse("Superpose()", supply), supply), ZeroMass);
}

TEST_CASE("normalize is idempotent up to measure equivalence") {
    NameSupply supply;
    auto m = parse("Superpose((2, Dirac(0)), (6, Dirac(1)))", supply);
    auto once = normalize(m, supply);
    auto twice = normalize(once, supply);
    // MC expectations of a random integrand agree
    auto run = [&](const ExprPtr& prog, std::uint64_t seed) {
        Rng rng(seed);
        double wsum = 0, fsum = 0;
        for (int i = 0; i < 40000; ++i) {
            auto [v, w] = sample(prog, {}, rng);
            wsum += w;
            fsum += w * (3.0 * as_real(v) - 1.0);
        }
        return fsum / wsum;
    };
    CHECK(run(once, 7) == doctest::Approx(run(twice, 8)).epsilon(0.02));
    // and the superpose frequencies match the enumeration 6/(2+6)
    Rng rng(9);
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        auto [v, w] = sample(once, {}, rng);
        CHECK(w == doctest::Approx(1.0));
        ones += as_real(v) == 1.0;
    }
    CHECK(std::fabs(ones / double(n) - 0.75) <= 4 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("normalizing the reweighted normal recovers the conjugate posterior") {
    NameSupply supply;
    // the disintegrated joint at observation y
    auto m = parse(
        "x <~ Normal(a, s);"
        "Weight( exp(-(y-x)^2/(2*t^2))/t/sqrt(2*pi), x )",
        supply);
    SimplifyOptions opts;
    opts.assume.positive_vars = {"s", "t"};
    auto out = simplify(normalize(m, supply, opts.assume), supply, opts);
    auto golden = parse("Normal( (y*s^2+a*t^2)/(s^2+t^2), s*t/sqrt(s^2+t^2) )");
    CAPTURE(pretty(out));
    CHECK(simplify_equal(out, golden, supply, opts));
}

TEST_CASE("conditioning the section-5 joint gives the posterior") {
    NameSupply supply;
    auto joint = parse("x <~ Normal(a, s); y <~ Normal(x, t); Dirac((y, x))", supply);
    SimplifyOptions opts;
    opts.assume.positive_vars = {"s", "t"};
    auto cond = condition(joint, supply, opts.assume);
    REQUIRE(cond->tag == Tag::Lam);
    auto simplified = simplify(cond, supply, opts);
    // golden with the observation named after the lambda binder
    Name o = simplified->name;
    auto golden_body = parse("Normal( (y*s^2+a*t^2)/(s^2+t^2), s*t/sqrt(s^2+t^2) )", supply);
    auto golden = lam(Name{"y", 0}, substitute(golden_body, Name{"y", 0}, var(Name{"y", 0}), supply));
    CHECK(simplify_equal(simplified, parse("Lam(y, Normal( (y*s^2+a*t^2)/(s^2+t^2), s*t/sqrt(s^2+t^2) ))"),
                         supply, opts));
    (void)o;
    (void)golden;
}

TEST_CASE("conditioning an independent pair returns the marginal") {
    NameSupply supply;
    auto joint = parse("x <~ Uniform(0, 1); y <~ Uniform(0, 1); Dirac((x, y))", supply);
    auto cond = condition(joint, supply);
    auto simplified = simplify(cond, supply);
    CHECK(simplify_equal(simplified, parse("Lam(o, Uniform(0, 1))"), supply));
}

TEST_CASE("uniform-uniform posterior mean matches quadrature") {
    NameSupply supply;
    // condition on y = 2.5; posterior density over x on (0,2) is
    // proportional to If(x < 2.5, 1/(3-x), 0)
    auto joint = parse("x <~ Uniform(0, 2); y <~ Uniform(x, 3); Dirac((y, x))", supply);
    auto cond = condition(joint, supply);
    auto post = apply(cond, lit(Rational(5, 2)), supply);
    Name u{"u", 0};
    double post_mean = eval_real(expect(post, lam(u, var(u)), supply));

    // 1-D quadrature oracle on the unnormalized slice
    auto f = [](double x) { return x < 2.5 ? 1.0 / (3.0 - x) : 0.0; };
    const int n = 200000;
    double h = 2.0 / n, num = 0, den = 0;
    for (int i = 0; i <= n; ++i) {
        double x = i * h, wgt = (i == 0 || i == n) ? 0.5 : 1.0;
        num += wgt * x * f(x);
        den += wgt * f(x);
    }
    CHECK(post_mean == doctest::Approx(num / den).epsilon(1e-5));
}
