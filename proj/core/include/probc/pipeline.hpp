#ifndef PROBC_PIPELINE_HPP
#define PROBC_PIPELINE_HPP

#include <string>
#include <vector>

#include "probc/expr.hpp"
#include "probc/simplify.hpp"

namespace probc {

struct PassSpec {
    std::string name;    // observe | disintegrate | density | expect |
                         // normalize | condition | mh | gibbs | simplify
    ExprPtr point;       // observe, density
    ExprPtr proposal;    // mh
    ExprPtr integrand;   // expect
    bool trace = false;  // simplify
};

struct PipelineSpec {
    ExprPtr program;
    std::vector<PassSpec> passes;
    Assumptions assume;
};

struct PipelineResult {
    ExprPtr program;
    // (pass name, program after the pass), one entry per executed pass
    std::vector<std::pair<std::string, ExprPtr>> intermediates;
    std::string trace_json;  // from the last traced simplify pass
    Assumptions facts;       // accumulated positivity knowledge
};

// Validates the pass list, then applies the passes in order, threading the
// positivity facts each transformation registers. Pass failures rethrow
// with the pass index and name prefixed.
PipelineResult run_pipeline(const PipelineSpec& spec, NameSupply& supply);

}  // namespace probc

#endif
