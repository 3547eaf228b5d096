#ifndef PROBC_SAMPLER_HPP
#define PROBC_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "probc/eval.hpp"
#include "probc/rng.hpp"

namespace probc {

// One weighted draw from a measure-typed program: primitives draw with
// weight 1, Weight returns its point and mass, Bind multiplies weights,
// Superpose picks a branch proportionally and carries the total mass,
// Categorical normalizes and returns weight 1.
std::pair<ValuePtr, double> sample(const ExprPtr& m, const Env& env, Rng& rng);

// MH chain record. states[i] is the state after transition i; accepted[i]
// tells whether it is the proposal of step i or a copy of the previous
// state. All three sequences share one length n; the initial state and the
// seed that produced everything are kept alongside.
struct Chain {
    std::vector<ValuePtr> states;
    std::vector<double> ratios;
    std::vector<bool> accepted;
    std::uint64_t seed = 0;
    ValuePtr init;

    std::vector<double> component(const std::string& path) const;
    double acceptance_rate() const;
};

// Iterates an MH transition kernel of type S -> Measure((S, Real)): each
// step samples (proposed, ratio) and accepts with probability min(1, ratio).
Chain run_chain(const ExprPtr& kernel, ValuePtr init, std::size_t n, Rng& rng,
                const Env& env = {});

// Effective sample size: n / (1 + 2 * sum of leading autocorrelations),
// truncated at the first non-positive estimate.
double ess(const std::vector<double>& xs);

}  // namespace probc

#endif
