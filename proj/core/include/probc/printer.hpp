#ifndef PROBC_PRINTER_HPP
#define PROBC_PRINTER_HPP

#include <string>

#include "probc/expr.hpp"

namespace probc {

// Renders an expression in the surface syntax. Binder names are renamed
// scope-aware so the output always re-parses to an alpha-equal term;
// Dirac, comparison chains and tuple binders are re-sugared where the
// structure allows it.
std::string pretty(const ExprPtr& e);

}  // namespace probc

#endif
