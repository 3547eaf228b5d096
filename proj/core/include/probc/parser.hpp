#ifndef PROBC_PARSER_HPP
#define PROBC_PARSER_HPP

#include <string>

#include "probc/expr.hpp"

namespace probc {

// Parses the surface syntax documented in docs/grammar.md. Throws
// SyntaxError with line/column on malformed input. `supply` mints the
// variables introduced while desugaring tuple binders; pass the pipeline's
// supply when the result feeds further transformations.
ExprPtr parse(const std::string& text, NameSupply& supply);

// Convenience for standalone parsing (round-trip checks, goldens).
ExprPtr parse(const std::string& text);

}  // namespace probc

#endif
