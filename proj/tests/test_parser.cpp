#include <doctest.h>

#include "gen.hpp"
#include "probc/errors.hpp"
#include "probc/expr.hpp"
#include "probc/parser.hpp"
#include "probc/printer.hpp"

using namespace probc;

TEST_CASE("bind parses right-associated with semicolon") {
    auto e = parse("x <~ Uniform(0, 2); Uniform(x, 3)");
    REQUIRE(e->tag == Tag::Bind);
    CHECK(e->name.text == "x");
    CHECK(e->kids[0]->tag == Tag::Uniform);
    CHECK(e->kids[1]->tag == Tag::Uniform);
    CHECK(e->kids[1]->kids[0]->tag == Tag::Var);
}

TEST_CASE("Dirac desugars to Weight(1, .)") {
    auto e = parse("Dirac(8)");
    CHECK(alpha_equal(e, weight(lit(1), lit(8))));
    CHECK(pretty(e) == "Dirac(8)");
}

TEST_CASE("tuple binders desugar to projections") {
    NameSupply supply;
    auto e = parse("Lam((m1,m2), Dirac(m1))", supply);
    Name p{"p", 9};
    CHECK(alpha_equal(e, lam(p, weight(lit(1), fst(var(p))))));
}

TEST_CASE("comparison chains desugar to conjunctions") {
    Name x{"x", 0};
    auto e = parse("0<x<2");
    CHECK(alpha_equal(e, chain_and(less(lit(0), var(x)), less(var(x), lit(2)))));
    CHECK(pretty(e) == "0 < x < 2");
}

TEST_CASE("literal forms") {
    CHECK(is_lit(parse("0.7"), Rational(7, 10)));
    CHECK(is_lit(parse("1/2"), Rational(1, 2)));
    CHECK(is_lit(parse("-3"), Rational(-3)));
    CHECK(parse("pi")->tag == Tag::Const);
    auto ninf = parse("-inf");
    CHECK(ninf->tag == Tag::Infinity);
    CHECK(ninf->negative);
    CHECK(parse("Unit")->tag == Tag::UnitE);
}

TEST_CASE("projection postfix and Fst/Snd are interchangeable") {
    CHECK(alpha_equal(parse("p[0]"), parse("Fst(p)")));
    CHECK(alpha_equal(parse("p[1][0]"), parse("Fst(Snd(p))")));
}

TEST_CASE("n-ary tuples nest to the right") {
    CHECK(alpha_equal(parse("(1, 2, 3)"), pair(lit(1), pair(lit(2), lit(3)))));
}

TEST_CASE("precedence matches the usual conventions") {
    CHECK(alpha_equal(parse("1 + 2 * 3"), add(lit(1), mul(lit(2), lit(3)))));
    CHECK(alpha_equal(parse("2 ^ x ^ 2"), pow(lit(2), pow(var(Name{"x", 0}), lit(2)))));
    CHECK(alpha_equal(parse("-(x)^2"), neg(pow(var(Name{"x", 0}), lit(2)))));
    CHECK(alpha_equal(parse("a - b - c"),
                      sub(sub(var(Name{"a", 0}), var(Name{"b", 0})), var(Name{"c", 0}))));
}

TEST_CASE("comments and whitespace are insignificant") {
    auto a = parse("x <~ Uniform(0, 2); # prior\n  Uniform(x, 3)");
    auto b = parse("x <~ Uniform(0,2);Uniform(x,3)");
    CHECK(alpha_equal(a, b));
}

TEST_CASE("syntax errors carry positions") {
    try {
        parse("x <~ Uniform(0, 2);\n  Uniform(x, ");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line == 2);
    }
    CHECK_THROWS_AS(parse("Foo(1, 2)"), UnknownPrimitive);
    CHECK_THROWS_AS(parse("Weight(1 2)"), SyntaxError);
    CHECK_THROWS_AS(parse("1 + "), SyntaxError);
}

TEST_CASE("empty and singleton Superpose forms parse") {
    auto z = parse("Superpose()");
    CHECK(z->tag == Tag::Superpose);
    CHECK(z->kids.empty());
    auto s = parse("Superpose((1/2, Dirac(0)), (1/2, Dirac(1)))");
    CHECK(s->kids.size() == 4);
}

TEST_CASE("paper listings round-trip") {
    const char* listings[] = {
        "x <~ Uniform(0, 2); Uniform(x, 3)",
        "x <~ Uniform(0, 2);\ny <~ Uniform(x, 3); Dirac((x,y))",
        "noiseT <~ Uniform(3, 8);\n"
        "noiseE <~ Uniform(1, 4);\n"
        "x1     <~ Normal( 0, noiseT);\n"
        "m1     <~ Normal(x1, noiseE);\n"
        "x2     <~ Normal(x1, noiseT);\n"
        "m2     <~ Normal(x2, noiseE);\n"
        "Dirac(((m1, m2), (noiseT, noiseE)))",
        "Lam((noiseT, noiseE),\n"
        " Superpose((1/2, n <~ Uniform(3, 8);\n"
        "                 Dirac((n, noiseE))),\n"
        "           (1/2, n <~ Uniform(1, 4);\n"
        "                 Dirac((noiseT, n)))))",
        "Int(0,2,x, Int(x,3,y, y)/(3-x))/(2-0)",
        "If(0<x<2, If(x<y<3, 1/(3-x), 0)/(2-0), 0)",
        "x <~ Normal(a, s);\nWeight( exp(-(y-x)^2/(2*t^2))/t/sqrt(2*pi), x )",
        "Normal( (y*s^2+a*t^2)/(s^2+t^2), s*t/sqrt(s^2+t^2) )",
    };
    for (const char* src : listings) {
        CAPTURE(src);
        NameSupply supply;
        auto e = parse(src, supply);
        auto back = parse(pretty(e), supply);
        CHECK(alpha_equal(e, back));
    }
}

TEST_CASE("round-trip property on random terms") {
    testgen::Gen gen(101);
    NameSupply supply;
    for (int i = 0; i < 400; ++i) {
        auto e = gen.term(4);
        std::string text = pretty(e);
        CAPTURE(text);
        auto back = parse(text, supply);
        CHECK(alpha_equal(e, back));
    }
}

TEST_CASE("pretty output is stable") {
    NameSupply supply;
    auto e = parse("x <~ Uniform(0, 2); Uniform(x, 3)", supply);
    CHECK(pretty(e) == pretty(e));
    CHECK(pretty(e) == "x <~ Uniform(0, 2);\nUniform(x, 3)");
}
