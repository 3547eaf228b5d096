#ifndef PROBC_MCMC_HPP
#define PROBC_MCMC_HPP

#include "probc/expr.hpp"
#include "probc/simplify.hpp"
#include "probc/type.hpp"

namespace probc {

// A generated transition kernel: S -> Measure((S, Real)) for MH kernels
// (the Real is the acceptance ratio) or S -> Measure(S) for Gibbs.
// The transformation itself makes no random choices; the program is run
// by the weighted sampler. `facts` carries the positivity knowledge
// gathered from the densities involved, for later simplification.
struct KernelProgram {
    ExprPtr expr;
    TypePtr state_type;  // null when the typing context leaves it open
    Assumptions facts;
};

// Metropolis-Hastings transformation: builds the symbolic acceptance
// ratio (p_new * q_old;new) / (p_old * q_new;old) by four density-
// transformation calls, performed once at transformation time.
KernelProgram mh(const ExprPtr& proposal, const ExprPtr& target, NameSupply& supply,
                 Assumptions assume = {}, const TypeCtx& ctx = {});

// Gibbs transformation: one full-conditional resampling branch per
// bind-bound scalar coordinate of the target, mixed uniformly
// (random-scan semantics).
KernelProgram gibbs(const ExprPtr& target, NameSupply& supply, Assumptions assume = {},
                    const TypeCtx& ctx = {});

}  // namespace probc

#endif
