#include <doctest.h>

#include "gen.hpp"
#include "probc/expr.hpp"
#include "probc/parser.hpp"

using namespace probc;

namespace {
const std::string kKalman2 =
    "Lam((m1,m2),"
    " noiseT <~ Uniform(3, 8);"
    " noiseE <~ Uniform(1, 4);"
    " x1     <~ Normal( 0, noiseT);"
    " x2     <~ Normal(x1, noiseT);"
    " Weight( exp(-(m2-x2)^2/(2*noiseE^2))"
    "         /noiseE/sqrt(2*pi)"
    "       * exp(-(m1-x1)^2/(2*noiseE^2))"
    "         /noiseE/sqrt(2*pi)"
    "       , (noiseT, noiseE) ))";
}

TEST_CASE("free_vars basics") {
    Name x{"x", 0};
    CHECK(free_vars(var(x)) == std::set<Name>{x});

    auto m = parse("x <~ Uniform(0, 2); Uniform(x, 3)");
    CHECK(free_vars(m).empty());
}

TEST_CASE("free vars of kalman2 body are the observation components") {
    NameSupply supply;
    auto k2 = parse(kKalman2, supply);
    REQUIRE(k2->tag == Tag::Lam);
    auto body_fv = free_vars(k2->kids[0]);
    // The tuple binder desugars to one variable used through projections.
    CHECK(body_fv.size() == 1);
    CHECK(body_fv.count(k2->name) == 1);
    CHECK(free_vars(k2).empty());
}

TEST_CASE("substitute basics") {
    NameSupply supply;
    Name x{"x", 0}, y{"y", 0};
    CHECK(alpha_equal(substitute(var(x), x, lit(3), supply), lit(3)));

    // Capture avoidance: [x := y] under Lam(y, .) must rename the binder.
    auto e = lam(y, var(x));
    auto r = substitute(e, x, var(y), supply);
    REQUIRE(r->tag == Tag::Lam);
    CHECK(r->name != y);
    CHECK(alpha_equal(r, lam(Name{"w", 0}, var(y))));
    CHECK_FALSE(alpha_equal(r, lam(y, var(y))));
}

TEST_CASE("substituting a variable for itself is alpha-identity") {
    testgen::Gen gen(7);
    NameSupply supply;
    Name x{"x", 0};
    for (int i = 0; i < 300; ++i) {
        auto e = gen.term(4);
        CHECK(alpha_equal(substitute(e, x, var(x), supply), e));
    }
}

TEST_CASE("substitution lemma on randomized terms") {
    // subst(subst(e,x,a),y,b) == subst(subst(e,y,b),x,subst(a,y,b))
    // when x not free in b and x != y.
    testgen::Gen gen(11);
    NameSupply supply;
    Name x{"x", 0}, y{"y", 0};
    int checked = 0;
    for (int i = 0; i < 400 && checked < 200; ++i) {
        auto e = gen.scalar(3, {x, y});
        auto a = gen.scalar(2, {y});
        auto b = gen.scalar(2, {});
        if (occurs_free(b, x)) continue;
        ++checked;
        auto lhs = substitute(substitute(e, x, a, supply), y, b, supply);
        auto rhs = substitute(substitute(e, y, b, supply), x, substitute(a, y, b, supply), supply);
        CHECK(alpha_equal(lhs, rhs));
    }
    CHECK(checked >= 100);
}

TEST_CASE("alpha_equal basics") {
    Name x{"x", 0}, y{"y", 0};
    CHECK(alpha_equal(lam(x, var(x)), lam(y, var(y))));
    CHECK_FALSE(alpha_equal(lam(x, var(x)), lam(x, lit(1))));
    // Free variables must match exactly.
    CHECK_FALSE(alpha_equal(var(x), var(y)));
}

TEST_CASE("alpha_equal is an equivalence relation") {
    testgen::Gen gen(23);
    NameSupply supply;
    for (int i = 0; i < 150; ++i) {
        auto e = gen.term(4);
        CHECK(alpha_equal(e, e));  // reflexive

        // A renamed copy stays equal both ways (symmetry) and chains
        // through a second renaming (transitivity).
        Name x = gen.name();
        auto e1 = lam(x, e);
        Name r1 = supply.fresh(x.text);
        auto e2 = lam(r1, substitute(e, x, var(r1), supply));
        Name r2 = supply.fresh(x.text);
        auto e3 = lam(r2, substitute(e, x, var(r2), supply));
        CHECK(alpha_equal(e1, e2));
        CHECK(alpha_equal(e2, e1));
        CHECK(alpha_equal(e2, e3));
        CHECK(alpha_equal(e1, e3));
    }
}

TEST_CASE("replace_subterm and tuple helper") {
    Name p{"p", 0};
    auto e = add(fst(var(p)), snd(var(p)));
    auto r = replace_subterm(e, fst(var(p)), lit(1));
    CHECK(alpha_equal(r, add(lit(1), snd(var(p)))));

    auto t = tuple({lit(1), lit(2), lit(3)});
    CHECK(alpha_equal(t, pair(lit(1), pair(lit(2), lit(3)))));
}
