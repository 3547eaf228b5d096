#ifndef PROBC_SIMPLIFY_HPP
#define PROBC_SIMPLIFY_HPP

#include <set>
#include <string>
#include <vector>

#include "probc/expr.hpp"

namespace probc {

// Positivity assumptions feeding the rewriter: variables by source name,
// plus arbitrary expressions (distribution parameters consumed by earlier
// transformations register here).
struct Assumptions {
    std::set<std::string> positive_vars;
    std::vector<ExprPtr> positive_exprs;

    void add_expr(const ExprPtr& e) { positive_exprs.push_back(e); }
    void merge(const Assumptions& o) {
        positive_vars.insert(o.positive_vars.begin(), o.positive_vars.end());
        positive_exprs.insert(positive_exprs.end(), o.positive_exprs.begin(),
                              o.positive_exprs.end());
    }
};

struct TraceStep {
    std::string rule;
    std::vector<int> path;  // child indices from the root
    ExprPtr before, after;
};

struct RewriteTrace {
    std::vector<TraceStep> steps;
    std::string to_json() const;
};

// Applies the recorded steps to `input`; throws TransformError if a step's
// before-term does not match. replay_trace(input, trace) == output holds
// for every simplify call that filled `trace`.
ExprPtr replay_trace(const ExprPtr& input, const RewriteTrace& trace);

struct SimplifyOptions {
    Assumptions assume;
    int budget = 10000;  // maximum rule applications
    RewriteTrace* trace = nullptr;
};

// Measure-preserving simplification: innermost-first rewriting to a
// fixpoint over the scalar normal form plus the documented measure rules
// (bind fusion, superpose flattening, symbolic marginalization, density
// recognition). Worst case returns the input canonicalized.
ExprPtr simplify(const ExprPtr& e, NameSupply& supply, const SimplifyOptions& opts = {});

// Density recognition only: a reweighted primitive whose total density
// matches the Normal/Beta/Gamma table is replaced by the recognized
// primitive (scaled by its mass when that is not provably 1).
ExprPtr recognize_density(const ExprPtr& m, NameSupply& supply, const SimplifyOptions& opts = {});

// Latent-variable elimination only: bind-bound variables that do not reach
// the outcome are integrated out when the Gaussian rules close the
// integral.
ExprPtr integrate_out(const ExprPtr& e, NameSupply& supply, const SimplifyOptions& opts = {});

// Equality up to simplification: canonicalize both sides first. This is
// the comparison used for golden files, tolerating term order and
// fresh-name drift.
bool simplify_equal(const ExprPtr& a, const ExprPtr& b, NameSupply& supply,
                    const SimplifyOptions& opts = {});

// Positivity facts visible at the program's top level: distribution
// parameters (and Uniform widths) whose free variables are free in the
// whole program.
Assumptions collect_program_facts(const ExprPtr& program);

}  // namespace probc

#endif
