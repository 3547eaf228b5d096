#include <doctest.h>

#include "probc/errors.hpp"
#include "probc/parser.hpp"
#include "probc/type.hpp"

using namespace probc;

namespace {
const char* kKalman =
    "noiseT <~ Uniform(3, 8);"
    "noiseE <~ Uniform(1, 4);"
    "x1     <~ Normal( 0, noiseT);"
    "m1     <~ Normal(x1, noiseE);"
    "x2     <~ Normal(x1, noiseT);"
    "m2     <~ Normal(x2, noiseE);"
    "Dirac(((m1, m2), (noiseT, noiseE)))";

const char* kKalman2 =
    "Lam((m1,m2),"
    " noiseT <~ Uniform(3, 8);"
    " noiseE <~ Uniform(1, 4);"
    " x1     <~ Normal( 0, noiseT);"
    " x2     <~ Normal(x1, noiseT);"
    " Weight( exp(-(m2-x2)^2/(2*noiseE^2))/noiseE/sqrt(2*pi)"
    "       * exp(-(m1-x1)^2/(2*noiseE^2))/noiseE/sqrt(2*pi)"
    "       , (noiseT, noiseE) ))";
}  // namespace

TEST_CASE("kalman ranges over pairs of pairs of reals") {
    auto t = typecheck(parse(kKalman));
    auto rr = Type::pair(Type::real(), Type::real());
    CHECK(type_shape_equal(t, Type::measure(Type::pair(rr, rr))));
    CHECK(t->to_string() == "Measure(((Real, Real), (Real, Real)))");
}

TEST_CASE("kalman2 is a function from pairs of reals to a measure") {
    auto t = typecheck(parse(kKalman2));
    auto rr = Type::pair(Type::real(), Type::real());
    CHECK(type_shape_equal(t, Type::fn(rr, Type::measure(rr))));
}

TEST_CASE("negative weights are rejected") {
    CHECK_THROWS_AS(typecheck(parse("Weight(-1, 8)")), TypeError);
    CHECK_THROWS_AS(typecheck(parse("Superpose((-2, Dirac(0)))")), TypeError);
    // A runtime-dependent weight is allowed; positivity is checked when run.
    CHECK_NOTHROW(typecheck(parse("Lam(w, Weight(w, 8))")));
}

TEST_CASE("unbound variables are reported") {
    CHECK_THROWS_AS(typecheck(parse("x + 1")), UnboundVariable);
    TypeCtx ctx{{Name{"x", 0}, Type::real()}};
    CHECK(type_shape_equal(typecheck(parse("x + 1"), ctx), Type::real()));
}

TEST_CASE("type errors carry a path to the offending subterm") {
    try {
        typecheck(parse("1 + (2 < 3)"));
        FAIL("expected TypeError");
    } catch (const TypeError& e) {
        CHECK(e.path == "1");
    }
}

TEST_CASE("branches must share an outcome type") {
    CHECK_THROWS_AS(typecheck(parse("Superpose((1, Dirac(0)), (1, Dirac((1, 2))))")), TypeError);
    CHECK_THROWS_AS(typecheck(parse("Categorical((1, 0), (1, (1, 2)))")), TypeError);
    CHECK_NOTHROW(typecheck(parse("Superpose((1, Dirac(0)), (2, Uniform(0, 1)))")));
}

TEST_CASE("infinity is legal only in integration bounds") {
    CHECK_NOTHROW(typecheck(parse("Int(-inf, inf, x, exp(-x^2))")));
    CHECK_THROWS_AS(typecheck(parse("1 + inf")), TypeError);
    CHECK_THROWS_AS(typecheck(parse("Dirac(inf)")), TypeError);
}

TEST_CASE("nonneg refinement marks densities") {
    CHECK(typecheck(parse("exp(0 - x^2)"), {{Name{"x", 0}, Type::real()}})->kind ==
          TypeKind::NonNegReal);
    CHECK(typecheck(parse("0.7"))->kind == TypeKind::NonNegReal);
    CHECK(typecheck(parse("-0.7"))->kind == TypeKind::Real);
}

TEST_CASE("typechecking is deterministic") {
    auto a = typecheck(parse(kKalman))->to_string();
    auto b = typecheck(parse(kKalman))->to_string();
    CHECK(a == b);
}

TEST_CASE("function application and projections") {
    auto t = typecheck(parse("App(Lam(x, x + 1), 2)"));
    CHECK(type_shape_equal(t, Type::real()));
    auto tp = typecheck(parse("Lam(p, p[0] + p[1])"));
    REQUIRE(tp->kind == TypeKind::Fn);
    CHECK(type_shape_equal(tp->a, Type::pair(Type::real(), Type::real())));
}
