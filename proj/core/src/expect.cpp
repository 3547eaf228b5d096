#include "probc/expect.hpp"

#include "probc/errors.hpp"

namespace probc {

bool is_primitive_dist(const ExprPtr& e) {
    switch (e->tag) {
        case Tag::Uniform:
        case Tag::Normal:
        case Tag::Gamma:
        case Tag::Beta: return true;
        default: return false;
    }
}

ExprPtr primitive_pdf_unguarded(const ExprPtr& dist, const ExprPtr& at, NameSupply& supply) {
    switch (dist->tag) {
        case Tag::Uniform:
            return div(lit(1), sub(dist->kids[1], dist->kids[0]));
        case Tag::Normal: {
            const ExprPtr& mean = dist->kids[0];
            const ExprPtr& sd = dist->kids[1];
            ExprPtr kernel = exp(div(neg(pow(sub(at, mean), lit(2))),
                                     mul(lit(2), pow(sd, lit(2)))));
            return div(div(kernel, sd), sqrt(mul(lit(2), constant(SymConst::Pi))));
        }
        case Tag::Gamma: {
            const ExprPtr& shape = dist->kids[0];
            const ExprPtr& scale = dist->kids[1];
            Name u = supply.fresh("u");
            ExprPtr gamma_fn = integral(lit(0), infinity(false), u,
                                        mul(pow(var(u), sub(shape, lit(1))), exp(neg(var(u)))));
            ExprPtr num = mul(pow(at, sub(shape, lit(1))), exp(neg(div(at, scale))));
            return div(num, mul(gamma_fn, pow(scale, shape)));
        }
        case Tag::Beta: {
            const ExprPtr& a = dist->kids[0];
            const ExprPtr& b = dist->kids[1];
            Name u = supply.fresh("u");
            ExprPtr beta_fn =
                integral(lit(0), lit(1), u,
                         mul(pow(var(u), sub(a, lit(1))), pow(sub(lit(1), var(u)), sub(b, lit(1)))));
            ExprPtr num = mul(pow(at, sub(a, lit(1))), pow(sub(lit(1), at), sub(b, lit(1))));
            return div(num, beta_fn);
        }
        default: throw Unsupported("not a primitive distribution");
    }
}

std::pair<ExprPtr, ExprPtr> primitive_support(const ExprPtr& dist) {
    switch (dist->tag) {
        case Tag::Uniform: return {dist->kids[0], dist->kids[1]};
        case Tag::Normal: return {infinity(true), infinity(false)};
        case Tag::Gamma: return {lit(0), infinity(false)};
        case Tag::Beta: return {lit(0), lit(1)};
        default: throw Unsupported("not a primitive distribution");
    }
}

ExprPtr primitive_pdf(const ExprPtr& dist, const ExprPtr& at, NameSupply& supply) {
    ExprPtr body = primitive_pdf_unguarded(dist, at, supply);
    switch (dist->tag) {
        case Tag::Uniform:
            return if_(chain_and(less(dist->kids[0], at), less(at, dist->kids[1])), body, lit(0));
        case Tag::Normal: return body;
        case Tag::Gamma: return if_(less(lit(0), at), body, lit(0));
        case Tag::Beta:
            return if_(chain_and(less(lit(0), at), less(at, lit(1))), body, lit(0));
        default: throw Unsupported("not a primitive distribution");
    }
}

ExprPtr expect(const ExprPtr& m, const ExprPtr& f, NameSupply& supply) {
    switch (m->tag) {
        case Tag::Weight:
            return mul(m->kids[0], apply(f, m->kids[1], supply));
        case Tag::Uniform: {
            Name x = supply.fresh("x");
            ExprPtr body = apply(f, var(x), supply);
            return div(integral(m->kids[0], m->kids[1], x, body),
                       sub(m->kids[1], m->kids[0]));
        }
        case Tag::Normal:
        case Tag::Gamma:
        case Tag::Beta: {
            Name x = supply.fresh("x");
            auto [lo, hi] = primitive_support(m);
            ExprPtr density = primitive_pdf_unguarded(m, var(x), supply);
            return integral(lo, hi, x, mul(density, apply(f, var(x), supply)));
        }
        case Tag::Bind: {
            ExprPtr rhs = m->kids[0];
            ExprPtr body = m->kids[1];
            Name x = m->name;
            if (occurs_free(f, x)) {
                Name fresh = supply.fresh(x.text);
                body = substitute(body, x, var(fresh), supply);
                x = fresh;
            }
            ExprPtr inner = expect(body, f, supply);
            return expect(rhs, lam(x, inner), supply);
        }
        case Tag::Superpose: {
            if (m->kids.empty()) return lit(0);
            ExprPtr acc;
            for (std::size_t i = 0; i + 1 < m->kids.size(); i += 2) {
                ExprPtr term = mul(m->kids[i], expect(m->kids[i + 1], f, supply));
                acc = acc ? add(acc, term) : term;
            }
            return acc;
        }
        case Tag::Categorical: {
            if (m->kids.empty()) throw Unsupported("expect of an empty Categorical");
            ExprPtr num, den;
            for (std::size_t i = 0; i + 1 < m->kids.size(); i += 2) {
                ExprPtr term = mul(m->kids[i], apply(f, m->kids[i + 1], supply));
                num = num ? add(num, term) : term;
                den = den ? add(den, m->kids[i]) : m->kids[i];
            }
            return div(num, den);
        }
        case Tag::If:
            return if_(m->kids[0], expect(m->kids[1], f, supply), expect(m->kids[2], f, supply));
        case Tag::App:
            if (m->kids[0]->tag == Tag::Lam) {
                return expect(apply(m->kids[0], m->kids[1], supply), f, supply);
            }
            throw Unsupported("expect: cannot transform an opaque application");
        default:
            throw Unsupported("expect: unsupported measure form");
    }
}

}  // namespace probc
