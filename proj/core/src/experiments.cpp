#include "probc/experiments.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "probc/disintegrate.hpp"
#include "probc/errors.hpp"
#include "probc/mcmc.hpp"
#include "probc/parser.hpp"
#include "probc/sampler.hpp"
#include "probc/simplify.hpp"

namespace probc {

const char* kKalmanSource =
    "noiseT <~ Uniform(3, 8);\n"
    "noiseE <~ Uniform(1, 4);\n"
    "x1     <~ Normal( 0, noiseT);\n"
    "m1     <~ Normal(x1, noiseE);\n"
    "x2     <~ Normal(x1, noiseT);\n"
    "m2     <~ Normal(x2, noiseE);\n"
    "Dirac(((m1, m2), (noiseT, noiseE)))\n";

const char* kKalmanProposalSource =
    "Lam((noiseT, noiseE),\n"
    " Superpose((1/2, n <~ Uniform(3, 8);\n"
    "                 Dirac((n, noiseE))),\n"
    "           (1/2, n <~ Uniform(1, 4);\n"
    "                 Dirac((noiseT, n)))))\n";

std::string KalmanReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"seed\": " << seed << ", \"n\": " << n << ", \"obs\": [" << obs1 << ", " << obs2
       << "], \"mean_noise_t\": " << mean_noise_t << ", \"mean_noise_e\": " << mean_noise_e
       << ", \"ess_per_sample_t\": " << ess_per_sample_t
       << ", \"ess_per_sample_e\": " << ess_per_sample_e << ", \"accept_rate\": " << accept_rate
       << ", \"seconds\": " << seconds << "}";
    return os.str();
}

KalmanReport experiment_kalman(std::uint64_t seed, std::size_t n, double obs1, double obs2) {
    if (n < 1000) throw ValidationError("experiment kalman requires n >= 1000");
    auto started = std::chrono::steady_clock::now();

    NameSupply supply;
    Assumptions facts;
    auto model = parse(kKalmanSource, supply);
    auto proposal = parse(kKalmanProposalSource, supply);

    // disintegrate on the observation pair, then collapse the latent states
    auto posterior_fn = disintegrate(model, supply, &facts);
    SimplifyOptions opts;
    opts.assume = facts;
    posterior_fn = simplify(posterior_fn, supply, opts);

    // mh over the collapsed target with the observation symbolic
    if (posterior_fn->tag != Tag::Lam) throw TransformError("unexpected disintegration result");
    ExprPtr target = posterior_fn->kids[0];
    KernelProgram kp = mh(proposal, target, supply, facts);
    SimplifyOptions kopts;
    kopts.assume = kp.facts;
    ExprPtr kernel = simplify(lam(posterior_fn->name, kp.expr), supply, kopts);

    // bind the observation and run
    ExprPtr at_obs = app(kernel, pair(lit(rational_from_double(obs1)),
                                      lit(rational_from_double(obs2))));
    Rng rng(seed);
    auto chain = run_chain(at_obs, make_pair(make_real(5.0), make_real(2.0)), n, rng);

    auto ts = chain.component("0");
    auto es = chain.component("1");
    KalmanReport rep;
    rep.seed = seed;
    rep.n = n;
    rep.obs1 = obs1;
    rep.obs2 = obs2;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        rep.mean_noise_t += ts[i];
        rep.mean_noise_e += es[i];
    }
    rep.mean_noise_t /= static_cast<double>(ts.size());
    rep.mean_noise_e /= static_cast<double>(es.size());
    rep.ess_per_sample_t = ess(ts) / static_cast<double>(n);
    rep.ess_per_sample_e = ess(es) / static_cast<double>(n);
    rep.accept_rate = chain.acceptance_rate();
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rep;
}

std::string GmmReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"seed\": " << seed << ", \"n_points\": " << n_points << ", \"sweeps\": " << sweeps
       << ", \"separation\": " << separation << ", \"accuracy_per_sweep\": [";
    for (std::size_t i = 0; i < accuracy_per_sweep.size(); ++i) {
        if (i) os << ", ";
        os << accuracy_per_sweep[i];
    }
    os << "]}";
    return os.str();
}

namespace {

Rational round_milli(double x) {
    return Rational(static_cast<long>(std::lround(x * 1000.0)), 1000);
}

void flatten_state(const ValuePtr& v, std::vector<double>& out) {
    if (auto* p = std::get_if<std::pair<ValuePtr, ValuePtr>>(&v->v)) {
        flatten_state(p->first, out);
        flatten_state(p->second, out);
        return;
    }
    out.push_back(as_real(v));
}

}  // namespace

GmmReport experiment_gmm(std::uint64_t seed, std::size_t n_points, int sweeps, double separation) {
    if (n_points < 2 || n_points > 40) {
        throw ValidationError("experiment gmm requires 2 <= n_points <= 40");
    }
    if (sweeps < 1) throw ValidationError("experiment gmm requires sweeps >= 1");

    Rng data_rng = Rng(seed).substream(0);
    double mu0 = -separation / 2, mu1 = separation / 2;

    std::vector<int> planted(n_points);
    std::vector<Rational> data(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        planted[i] = data_rng.next_double() < 0.5 ? 0 : 1;
        double y = data_rng.normal(planted[i] == 0 ? mu0 : mu1, 1.0);
        // data on a millimeter grid keeps the exact algebra small
        data[i] = round_milli(y);
    }

    // unrolled joint over ((y_1..y_n), (z_1..z_n))
    NameSupply supply;
    std::vector<Name> zs, ys;
    for (std::size_t i = 0; i < n_points; ++i) {
        zs.push_back(supply.fresh("z" + std::to_string(i)));
        ys.push_back(supply.fresh("y" + std::to_string(i)));
    }
    std::vector<ExprPtr> yvars, zvars;
    for (std::size_t i = 0; i < n_points; ++i) {
        yvars.push_back(var(ys[i]));
        zvars.push_back(var(zs[i]));
    }
    ExprPtr program = dirac(pair(tuple(yvars), tuple(zvars)));
    for (std::size_t i = n_points; i-- > 0;) {
        ExprPtr mean = if_(less(var(zs[i]), lit(Rational(1, 2))), lit(rational_from_double(mu0)),
                           lit(rational_from_double(mu1)));
        program = bind(ys[i], normal(mean, lit(1)), program);
        program = bind(zs[i], categorical({lit(Rational(1, 2)), lit(0), lit(Rational(1, 2)), lit(1)}),
                       program);
    }

    Assumptions facts;
    ExprPtr posterior_fn = disintegrate(program, supply, &facts);
    std::vector<ExprPtr> obs;
    obs.reserve(n_points);
    for (const auto& d : data) obs.push_back(lit(d));
    ExprPtr target = apply(posterior_fn, tuple(obs), supply);

    KernelProgram kp = gibbs(target, supply, facts);
    SimplifyOptions opts;
    opts.assume = kp.facts;
    ExprPtr kernel = simplify(kp.expr, supply, opts);

    // always-accept wrapper so the chain runner applies it
    Name s = supply.fresh("s");
    Name nx = supply.fresh("n");
    ExprPtr wrapped = lam(s, bind(nx, app(kernel, var(s)), dirac(pair(var(nx), lit(1)))));

    // start from all-zero labels
    std::vector<ExprPtr> init_parts(n_points, lit(0));
    ValuePtr state = eval(tuple(init_parts));

    GmmReport rep;
    rep.seed = seed;
    rep.n_points = n_points;
    rep.sweeps = sweeps;
    rep.separation = separation;

    Rng rng = Rng(seed).substream(1);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        auto chain = run_chain(wrapped, state, n_points, rng);
        state = chain.states.back();
        std::vector<double> labels;
        flatten_state(state, labels);
        double correct = 0;
        for (std::size_t i = 0; i < n_points; ++i) {
            correct += (labels[i] < 0.5 ? 0 : 1) == planted[i] ? 1 : 0;
        }
        rep.accuracy_per_sweep.push_back(correct / static_cast<double>(n_points));
    }
    return rep;
}

}  // namespace probc
