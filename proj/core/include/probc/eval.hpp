#ifndef PROBC_EVAL_HPP
#define PROBC_EVAL_HPP

#include <functional>

#include "probc/expr.hpp"
#include "probc/value.hpp"

namespace probc {

// Deterministic evaluator for non-measure expressions. Residual Int is
// evaluated by adaptive Simpson quadrature (absolute tolerance 1e-8, max
// depth 50, infinite bounds via algebraic substitution); residual Sum by
// direct summation over integer bounds.
ValuePtr eval(const ExprPtr& e, const Env& env = {});

double eval_real(const ExprPtr& e, const Env& env = {});

// Adaptive Simpson on [a, b]; either bound may be infinite.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-8, int max_depth = 50);

}  // namespace probc

#endif
