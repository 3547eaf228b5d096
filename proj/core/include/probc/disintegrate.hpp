#ifndef PROBC_DISINTEGRATE_HPP
#define PROBC_DISINTEGRATE_HPP

#include "probc/expr.hpp"
#include "probc/simplify.hpp"

namespace probc {

// Observation transformation: reweights a measure to the point `t`, scaled
// by the density of drawing it. Handles primitives, bind chains, branches;
// rejects Dirac/Weight endings and deterministic results.
ExprPtr observe(const ExprPtr& m, const ExprPtr& t, NameSupply& supply,
                Assumptions* facts = nullptr);

// Disintegration: turns a measure over pairs into a function from observed
// first components to unnormalized slices over the second. The observed
// expression must be built from bound variables by invertible steps
// (variable, pairing, shift by an expression, scaling by a nonzero
// constant, exp, log); the Jacobian of each inversion is inserted.
// Deterministic observed components are matched with equality indicators.
ExprPtr disintegrate(const ExprPtr& m, NameSupply& supply, Assumptions* facts = nullptr);

// Density transformation: disintegrate `x <~ m; Dirac((x, Unit))`, apply at
// `t`, and take the expectation of the constant-1 function. Free variables
// of `t` stay symbolic.
ExprPtr density(const ExprPtr& m, const ExprPtr& t, NameSupply& supply,
                Assumptions* facts = nullptr);

}  // namespace probc

#endif
