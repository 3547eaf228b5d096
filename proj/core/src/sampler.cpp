#include "probc/sampler.hpp"

#include <cmath>

#include "probc/errors.hpp"

namespace probc {

namespace {

double weight_of(const ExprPtr& e, const Env& env) {
    double w = eval_real(e, env);
    if (w < 0.0 || std::isnan(w)) throw EvalError("negative weight");
    return w;
}

std::pair<ValuePtr, double> sample_node(const ExprPtr& m, const Env& env, Rng& rng) {
    switch (m->tag) {
        case Tag::Weight: {
            double w = weight_of(m->kids[0], env);
            return {eval(m->kids[1], env), w};
        }
        case Tag::Uniform: {
            double lo = eval_real(m->kids[0], env);
            double hi = eval_real(m->kids[1], env);
            if (!(hi > lo)) throw EvalError("Uniform requires lo < hi");
            return {make_real(rng.uniform(lo, hi)), 1.0};
        }
        case Tag::Normal: {
            double mean = eval_real(m->kids[0], env);
            double sd = eval_real(m->kids[1], env);
            if (!(sd > 0.0)) throw EvalError("Normal requires a positive standard deviation");
            return {make_real(rng.normal(mean, sd)), 1.0};
        }
        case Tag::Gamma: {
            double shape = eval_real(m->kids[0], env);
            double scale = eval_real(m->kids[1], env);
            if (!(shape > 0.0) || !(scale > 0.0)) {
                throw EvalError("Gamma requires positive shape and scale");
            }
            return {make_real(rng.gamma(shape, scale)), 1.0};
        }
        case Tag::Beta: {
            double a = eval_real(m->kids[0], env);
            double b = eval_real(m->kids[1], env);
            if (!(a > 0.0) || !(b > 0.0)) throw EvalError("Beta requires positive parameters");
            return {make_real(rng.beta(a, b)), 1.0};
        }
        case Tag::Bind: {
            auto [v1, w1] = sample_node(m->kids[0], env, rng);
            auto [v2, w2] = sample_node(m->kids[1], env.extend(m->name, v1), rng);
            return {v2, w1 * w2};
        }
        case Tag::Superpose:
        case Tag::Categorical: {
            std::size_t n = m->kids.size() / 2;
            std::vector<double> ws(n);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                ws[i] = weight_of(m->kids[2 * i], env);
                total += ws[i];
            }
            if (total <= 0.0) {
                throw ZeroMeasure(m->tag == Tag::Superpose ? "Superpose with zero total mass"
                                                           : "Categorical with zero total mass");
            }
            double r = rng.uniform(0.0, total);
            std::size_t pick = n - 1;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += ws[i];
                if (r <= acc) {
                    pick = i;
                    break;
                }
            }
            if (m->tag == Tag::Categorical) {
                return {eval(m->kids[2 * pick + 1], env), 1.0};
            }
            auto [v, w] = sample_node(m->kids[2 * pick + 1], env, rng);
            return {v, total * w};
        }
        case Tag::If:
            return as_bool(eval(m->kids[0], env)) ? sample_node(m->kids[1], env, rng)
                                                  : sample_node(m->kids[2], env, rng);
        case Tag::App: {
            ValuePtr fv = eval(m->kids[0], env);
            const Closure& c = as_closure(fv);
            ValuePtr arg = eval(m->kids[1], env);
            return sample_node(c.body, c.env.extend(c.var, std::move(arg)), rng);
        }
        default:
            throw NonMeasure("cannot sample a non-measure expression");
    }
}

}  // namespace

std::pair<ValuePtr, double> sample(const ExprPtr& m, const Env& env, Rng& rng) {
    return sample_node(m, env, rng);
}

std::vector<double> Chain::component(const std::string& path) const {
    std::vector<double> xs;
    xs.reserve(states.size());
    for (const auto& s : states) xs.push_back(as_real(project_path(s, path)));
    return xs;
}

double Chain::acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    double n = 0;
    for (bool a : accepted) n += a ? 1 : 0;
    return n / static_cast<double>(accepted.size());
}

Chain run_chain(const ExprPtr& kernel, ValuePtr init, std::size_t n, Rng& rng, const Env& env) {
    ValuePtr kv = eval(kernel, env);
    const Closure& c = as_closure(kv);

    Chain chain;
    chain.init = init;
    chain.states.reserve(n);
    chain.ratios.reserve(n);
    chain.accepted.reserve(n);

    ValuePtr current = std::move(init);
    for (std::size_t i = 0; i < n; ++i) {
        std::pair<ValuePtr, double> drawn;
        try {
            drawn = sample_node(c.body, c.env.extend(c.var, current), rng);
        } catch (const Error& err) {
            throw RuntimeError("chain step " + std::to_string(i) + ": " + err.what());
        }
        const auto& pr = as_pair(drawn.first);
        double ratio = as_real(pr.second);
        if (ratio < 0.0 || std::isnan(ratio)) {
            throw RuntimeError("chain step " + std::to_string(i) + ": invalid acceptance ratio");
        }
        bool accept = rng.next_double() <= std::min(1.0, ratio);
        if (accept) current = pr.first;
        chain.states.push_back(current);
        chain.ratios.push_back(ratio);
        chain.accepted.push_back(accept);
    }
    return chain;
}

double ess(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 10) throw ValidationError("ess requires at least 10 samples");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double x : xs) c0 += (x - mean) * (x - mean);
    c0 /= static_cast<double>(n);
    if (c0 <= 0.0) throw DegenerateChain("zero variance chain");

    double acc = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        double ck = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) ck += (xs[i] - mean) * (xs[i + k] - mean);
        ck /= static_cast<double>(n);
        double rho = ck / c0;
        if (rho <= 0.0) break;
        acc += rho;
    }
    return static_cast<double>(n) / (1.0 + 2.0 * acc);
}

}  // namespace probc
