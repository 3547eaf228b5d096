#include "probc/pipeline.hpp"

#include <set>

#include "probc/disintegrate.hpp"
#include "probc/errors.hpp"
#include "probc/expect.hpp"
#include "probc/mcmc.hpp"
#include "probc/normalize.hpp"

namespace probc {

namespace {

const std::set<std::string> kPassNames = {"observe", "disintegrate", "density",
                                          "expect",  "normalize",    "condition",
                                          "mh",      "gibbs",        "simplify"};

void validate(const PipelineSpec& spec) {
    for (std::size_t i = 0; i < spec.passes.size(); ++i) {
        const PassSpec& p = spec.passes[i];
        std::string where = "pass " + std::to_string(i) + " (" + p.name + "): ";
        if (!kPassNames.count(p.name)) {
            throw ValidationError("pass " + std::to_string(i) + ": unknown pass '" + p.name + "'");
        }
        if ((p.name == "observe" || p.name == "density") && !p.point) {
            throw ValidationError(where + "requires --point");
        }
        if (p.name == "mh" && !p.proposal) throw ValidationError(where + "requires --proposal");
        if (p.name == "expect" && !p.integrand) throw ValidationError(where + "requires --integrand");
        if (p.name == "expect" && p.integrand->tag != Tag::Lam) {
            throw ValidationError(where + "the integrand must be a Lam");
        }
    }
}

}  // namespace

PipelineResult run_pipeline(const PipelineSpec& spec, NameSupply& supply) {
    validate(spec);

    PipelineResult res;
    res.program = spec.program;
    res.facts = spec.assume;
    res.facts.merge(collect_program_facts(spec.program));

    for (std::size_t i = 0; i < spec.passes.size(); ++i) {
        const PassSpec& p = spec.passes[i];
        auto ctx = [&](const std::string& what) {
            return "pass " + std::to_string(i) + " (" + p.name + "): " + what;
        };
        try {
            if (p.name == "observe") {
                res.program = observe(res.program, p.point, supply, &res.facts);
            } else if (p.name == "disintegrate") {
                res.program = disintegrate(res.program, supply, &res.facts);
            } else if (p.name == "density") {
                res.program = density(res.program, p.point, supply, &res.facts);
            } else if (p.name == "expect") {
                res.program = expect(res.program, p.integrand, supply);
            } else if (p.name == "normalize") {
                res.program = normalize(res.program, supply, res.facts);
            } else if (p.name == "condition") {
                res.program = condition(res.program, supply, res.facts);
            } else if (p.name == "mh") {
                KernelProgram k = mh(p.proposal, res.program, supply, res.facts);
                res.program = k.expr;
                res.facts = std::move(k.facts);
            } else if (p.name == "gibbs") {
                KernelProgram k = gibbs(res.program, supply, res.facts);
                res.program = k.expr;
                res.facts = std::move(k.facts);
            } else if (p.name == "simplify") {
                SimplifyOptions opts;
                opts.assume = res.facts;
                RewriteTrace trace;
                if (p.trace) opts.trace = &trace;
                res.program = simplify(res.program, supply, opts);
                if (p.trace) res.trace_json = trace.to_json();
            }
        } catch (const ValidationError& e) {
            throw ValidationError(ctx(e.what()));
        } catch (const TransformError& e) {
            throw TransformError(ctx(e.what()));
        } catch (const RuntimeError& e) {
            throw RuntimeError(ctx(e.what()));
        }
        res.intermediates.push_back({p.name, res.program});
    }
    return res;
}

}  // namespace probc
