#ifndef PROBC_EXPECT_HPP
#define PROBC_EXPECT_HPP

#include "probc/expr.hpp"

namespace probc {

// Density table for the primitive distributions, as expressions:
//   Uniform(a,b): If(a<x<b, 1/(b-a), 0)
//   Normal(m,s):  exp(-(x-m)^2/(2*s^2))/s/sqrt(2*pi)
//   Gamma(k,t):   If(0<x, x^(k-1)*exp(-x/t)/(G*t^k), 0),   G = Int(0,inf,u, u^(k-1)*exp(-u))
//   Beta(a,b):    If(0<x<1, x^(a-1)*(1-x)^(b-1)/B, 0),     B = Int(0,1,u, u^(a-1)*(1-u)^(b-1))
// The normalizers are spelled with Int so they stay inside the language.
bool is_primitive_dist(const ExprPtr& e);
ExprPtr primitive_pdf(const ExprPtr& dist, const ExprPtr& at, NameSupply& supply);
// Same density without the support indicator (the caller provides bounds).
ExprPtr primitive_pdf_unguarded(const ExprPtr& dist, const ExprPtr& at, NameSupply& supply);
// Support interval of a primitive as bound expressions.
std::pair<ExprPtr, ExprPtr> primitive_support(const ExprPtr& dist);

// Turns a measure program and an integrand into a number-typed program for
// the integral, leaving Int/Sum symbolic. Performs no simplification beyond
// beta-reducing the applications it creates.
ExprPtr expect(const ExprPtr& m, const ExprPtr& f, NameSupply& supply);

}  // namespace probc

#endif
