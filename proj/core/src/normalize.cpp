#include "probc/normalize.hpp"

#include "probc/disintegrate.hpp"
#include "probc/errors.hpp"
#include "probc/expect.hpp"

namespace probc {

ExprPtr normalize(const ExprPtr& m, NameSupply& supply, Assumptions assume) {
    assume.merge(collect_program_facts(m));
    Name x = supply.fresh("x");
    ExprPtr mass = expect(m, lam(x, lit(1)), supply);
    SimplifyOptions opts;
    opts.assume = assume;
    ExprPtr e1 = simplify(mass, supply, opts);
    if (is_lit(e1, Rational(0))) throw ZeroMass("normalize: the measure has zero total mass");
    Name z = supply.fresh("x");
    return bind(z, m, weight(div(lit(1), e1), var(z)));
}

ExprPtr condition(const ExprPtr& m, NameSupply& supply, Assumptions assume) {
    assume.merge(collect_program_facts(m));
    ExprPtr kernel = disintegrate(m, supply, &assume);
    Name o = supply.fresh("o");
    ExprPtr slice = apply(kernel, var(o), supply);
    return lam(o, normalize(slice, supply, assume));
}

}  // namespace probc
