#ifndef PROBC_NORMALIZE_HPP
#define PROBC_NORMALIZE_HPP

#include "probc/expr.hpp"
#include "probc/simplify.hpp"

namespace probc {

// Normalization: x <~ m; Weight(1/e1, x) where e1 is the total mass
// expectation, simplified symbolically first. Throws ZeroMass when the
// mass reduces to the literal 0; when symbolic reduction fails the mass
// stays as a residual integral evaluated by quadrature at sampling time.
ExprPtr normalize(const ExprPtr& m, NameSupply& supply, Assumptions assume = {});

// Conditioning: disintegration followed by per-slice normalization.
ExprPtr condition(const ExprPtr& m, NameSupply& supply, Assumptions assume = {});

}  // namespace probc

#endif
