#include <doctest.h>

#include <cmath>

#include "probc/disintegrate.hpp"
#include "probc/errors.hpp"
#include "probc/eval.hpp"
#include "probc/expect.hpp"
#include "probc/parser.hpp"
#include "probc/printer.hpp"
#include "probc/sampler.hpp"
#include "probc/simplify.hpp"

using namespace probc;

TEST_CASE("observe reweights the final draw by its density") {
    NameSupply supply;
    auto m = parse("x <~ Uniform(0, 2); Uniform(x, 3)", supply);
    auto out = observe(m, var(Name{"y", 0}), supply);
    auto golden = parse("x <~ Uniform(0, 2); Weight(If(x<y<3, 1/(3-x), 0), y)");
    CHECK(alpha_equal(out, golden));
}

TEST_CASE("observe of a uniform inside its support has density 1") {
    NameSupply supply;
    auto out = observe(parse("Uniform(0, 1)", supply), lit(Rational(1, 2)), supply);
    REQUIRE(out->tag == Tag::Weight);
    CHECK(eval_real(out->kids[0]) == 1.0);
    CHECK(eval_real(out->kids[1]) == 0.5);
}

TEST_CASE("observe rejects Dirac and deterministic endings") {
    NameSupply supply;
    CHECK_THROWS_AS(observe(parse("Dirac(3)", supply), var(Name{"y", 0}), supply), Unhandled);
    CHECK_THROWS_AS(observe(parse("x <~ Uniform(0,1); Dirac(x*2)", supply), var(Name{"y", 0}), supply),
                    Unhandled);
}

TEST_CASE("observe maps over superpose and if branches") {
    NameSupply supply;
    auto m = parse("Superpose((1/2, Uniform(0, 1)), (1/2, Normal(0, 1)))", supply);
    auto out = observe(m, lit(Rational(1, 4)), supply);
    REQUIRE(out->tag == Tag::Superpose);
    CHECK(out->kids[1]->tag == Tag::Weight);
    CHECK(out->kids[3]->tag == Tag::Weight);
}

namespace {
const char* kJoint = "x <~ Uniform(0, 2); y <~ Uniform(x, 3); Dirac((y, x))";
}

TEST_CASE("disintegration matches the observe construction (bridge law)") {
    NameSupply supply;
    auto m = parse(kJoint, supply);
    auto k = disintegrate(m, supply);
    REQUIRE(k->tag == Tag::Lam);
    Name y{"yy", 0};
    auto applied = simplify(apply(k, var(y), supply), supply);
    auto golden = parse("x <~ Uniform(0, 2); Weight(If(x<yy<3, 1/(3-x), 0), x)");
    CHECK(simplify_equal(applied, golden, supply));
}

TEST_CASE("disintegrating the kalman joint gives kalman2") {
    NameSupply supply;
    auto kalman = parse(
        "noiseT <~ Uniform(3, 8);"
        "noiseE <~ Uniform(1, 4);"
        "x1     <~ Normal( 0, noiseT);"
        "m1     <~ Normal(x1, noiseE);"
        "x2     <~ Normal(x1, noiseT);"
        "m2     <~ Normal(x2, noiseE);"
        "Dirac(((m1, m2), (noiseT, noiseE)))",
        supply);
    auto kalman2_golden = parse(
        "Lam((m1,m2),"
        " noiseT <~ Uniform(3, 8);"
        " noiseE <~ Uniform(1, 4);"
        " x1     <~ Normal( 0, noiseT);"
        " x2     <~ Normal(x1, noiseT);"
        " Weight( exp(-(m2-x2)^2/(2*noiseE^2))"
        "         /noiseE/sqrt(2*pi)"
        "       * exp(-(m1-x1)^2/(2*noiseE^2))"
        "         /noiseE/sqrt(2*pi)"
        "       , (noiseT, noiseE) ))",
        supply);
    auto k2 = disintegrate(kalman, supply);
    CHECK(simplify_equal(k2, kalman2_golden, supply));
}

TEST_CASE("invertible deterministic observations insert jacobians") {
    NameSupply supply;
    // push-forward of Uniform(0,1) under doubling is Uniform(0,2)
    auto m = parse("x <~ Uniform(0, 1); Dirac((2*x, Unit))", supply);
    auto k = disintegrate(m, supply);
    Name o{"o", 0};
    auto slice = simplify(apply(k, var(o), supply), supply);
    // density o: If(0 < o/2 < 1, 1, 0) * 1/2
    NameSupply s2;
    auto dens = density(parse("x <~ Uniform(0, 1); Dirac(2*x)", s2), var(o), s2);
    Env env_in = Env().extend(o, make_real(1.3));
    Env env_out = Env().extend(o, make_real(2.7));
    CHECK(eval_real(dens, env_in) == doctest::Approx(0.5));
    CHECK(eval_real(dens, env_out) == 0.0);

    // histogram oracle: 10^6 doubled uniform draws land in [1.25, 1.35]
    // with probability ~ 0.1 * 0.5
    Rng rng(31);
    int in_bin = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        double v = 2.0 * rng.uniform(0.0, 1.0);
        if (v >= 1.25 && v <= 1.35) ++in_bin;
    }
    double p_hat = static_cast<double>(in_bin) / n;
    double p_model = 0.1 * 0.5;
    CHECK(std::fabs(p_hat - p_model) <= 4 * std::sqrt(p_model * (1 - p_model) / n));
    (void)slice;
}

TEST_CASE("affine and exp observations invert") {
    NameSupply supply;
    Name o{"o", 0};
    // y = 3x + 1 with x ~ N(0,1): density is phi((o-1)/3)/3
    auto m = parse("x <~ Normal(0, 1); Dirac(3*x + 1)", supply);
    auto dens = density(m, var(o), supply);
    Env env = Env().extend(o, make_real(2.0));
    double want = std::exp(-(1.0 / 3.0) * (1.0 / 3.0) / 2.0) / std::sqrt(2 * M_PI) / 3.0;
    CHECK(eval_real(dens, env) == doctest::Approx(want));

    // y = exp(x): lognormal density
    auto m2 = parse("x <~ Normal(0, 1); Dirac(exp(x))", supply);
    auto dens2 = density(m2, var(o), supply);
    double at = 1.7;
    Env env2 = Env().extend(o, make_real(at));
    double want2 = std::exp(-std::log(at) * std::log(at) / 2.0) / std::sqrt(2 * M_PI) / at;
    CHECK(eval_real(dens2, env2) == doctest::Approx(want2));
    // out of the exp range
    Env env3 = Env().extend(o, make_real(-0.5));
    CHECK(eval_real(dens2, env3) == 0.0);
}

TEST_CASE("non-invertible observations are rejected") {
    NameSupply supply;
    CHECK_THROWS_AS(disintegrate(parse("x <~ Uniform(0,1); Dirac((x*x, Unit))", supply), supply),
                    NotInvertible);
    CHECK_THROWS_AS(
        disintegrate(parse("x <~ Uniform(0,1); y <~ Uniform(0,1); Dirac((x*y, Unit))", supply),
                     supply),
        NotInvertible);
    CHECK_THROWS_AS(disintegrate(parse("x <~ Uniform(0,1); Dirac((x+x, Unit))", supply), supply),
                    NotInvertible);
    // A shift by an earlier draw is invertible in the later site and is
    // accepted: observing x+y resolves y = t - x.
    CHECK_NOTHROW(disintegrate(
        parse("x <~ Uniform(0,1); y <~ Uniform(0,1); Dirac((x+y, Unit))", supply), supply));
    CHECK_THROWS_AS(disintegrate(parse("Uniform(0,1)", supply), supply), NotPairMeasure);
}

TEST_CASE("the density transformation matches the published example") {
    NameSupply supply;
    auto m = parse("x <~ Uniform(0, 2); y <~ Uniform(x, 3); Dirac((x, y))", supply);
    Name p{"pt", 0};
    auto dens = density(m, var(p), supply);
    auto golden_fn = parse("Lam((x,y), If(0<x<2, If(x<y<3, 1/(3-x), 0)/(2-0), 0))");
    auto golden = apply(golden_fn, var(p), supply);
    CHECK(simplify_equal(dens, golden, supply));

    // arithmetic instantiation at (1.0, 2.0)
    Env env = Env().extend(p, make_pair(make_real(1.0), make_real(2.0)));
    CHECK(eval_real(dens, env) == doctest::Approx(0.25));
}

TEST_CASE("density keeps free variables of the point symbolic") {
    NameSupply supply;
    Name y{"y", 0};
    auto dens = density(parse("Normal(0, 1)", supply), var(y), supply);
    CHECK(free_vars(dens).count(y) == 1);
    // standard normal pdf at 0, oracle computed numerically
    double oracle = 1.0 / std::sqrt(2.0 * M_PI);
    CHECK(eval_real(dens, Env().extend(y, make_real(0.0))) == doctest::Approx(oracle));
    CHECK(oracle == doctest::Approx(0.3989423).epsilon(1e-6));
}

TEST_CASE("density out of support evaluates to zero") {
    NameSupply supply;
    auto dens = density(parse("Uniform(0, 1)", supply), lit(2), supply);
    CHECK(eval_real(dens) == 0.0);
}

TEST_CASE("density of a categorical uses exact matching") {
    NameSupply supply;
    auto m = parse("Categorical((1/5, 0), (4/5, 1))", supply);
    Name v{"v", 0};
    auto dens = density(m, var(v), supply);
    CHECK(eval_real(dens, Env().extend(v, make_real(0.0))) == doctest::Approx(0.2));
    CHECK(eval_real(dens, Env().extend(v, make_real(1.0))) == doctest::Approx(0.8));
    CHECK(eval_real(dens, Env().extend(v, make_real(0.5))) == 0.0);
}

TEST_CASE("density of mixtures sums branch densities") {
    NameSupply supply;
    auto m = parse("Superpose((1/2, Uniform(0, 2)), (1/2, Uniform(1, 3)))", supply);
    Name v{"v", 0};
    auto dens = density(m, var(v), supply);
    CHECK(eval_real(dens, Env().extend(v, make_real(0.5))) == doctest::Approx(0.25));
    CHECK(eval_real(dens, Env().extend(v, make_real(1.5))) == doctest::Approx(0.5));
}

TEST_CASE("mass is preserved through disintegration (Fubini check)") {
    NameSupply supply;
    auto joint = parse(kJoint, supply);
    // total mass of the joint
    Name u{"u", 0};
    auto total = expect(joint, lam(u, lit(1)), supply);
    double lhs = eval_real(total);

    // integral over the observed coordinate of each slice's mass
    auto k = disintegrate(joint, supply);
    Name o{"o", 0};
    auto slice_mass = expect(apply(k, var(o), supply), lam(u, lit(1)), supply);
    auto integated = integral(lit(0), lit(3), o, slice_mass);
    double rhs = eval_real(integated);
    CHECK(std::fabs(lhs - rhs) <= 1e-6);
}

TEST_CASE("density is nonnegative in and out of support") {
    NameSupply supply;
    auto m = parse(kJoint, supply);
    auto k = disintegrate(m, supply);
    Name o{"o", 0}, u{"u", 0};
    auto dens = expect(apply(k, var(o), supply), lam(u, lit(1)), supply);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        double point = rng.uniform(-2.0, 5.0);
        CHECK(eval_real(dens, Env().extend(o, make_real(point))) >= 0.0);
    }
}
