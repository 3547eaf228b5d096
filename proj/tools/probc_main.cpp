#include <CLI11.hpp>

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "probc/disintegrate.hpp"
#include "probc/errors.hpp"
#include "probc/eval.hpp"
#include "probc/experiments.hpp"
#include "probc/parser.hpp"
#include "probc/pipeline.hpp"
#include "probc/printer.hpp"
#include "probc/sampler.hpp"
#include "probc/type.hpp"

namespace {

using namespace probc;

constexpr int kExitValidation = 2;
constexpr int kExitTransform = 3;
constexpr int kExitRuntime = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write '" + out_path + "'");
    out << text << "\n";
}

// --env bindings "name=expr,name=expr" with literal expression values
Env parse_env(const std::string& spec, NameSupply& supply, TypeCtx* ctx = nullptr) {
    Env env;
    if (spec.empty()) return env;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw ValidationError("bad --env entry '" + item + "'");
        Name n{item.substr(0, eq), 0};
        ValuePtr v = eval(parse(item.substr(eq + 1), supply));
        if (ctx) {
            std::function<TypePtr(const ValuePtr&)> ty = [&](const ValuePtr& val) -> TypePtr {
                if (std::holds_alternative<double>(val->v)) return Type::real();
                if (std::holds_alternative<bool>(val->v)) return Type::boolean();
                if (std::holds_alternative<std::monostate>(val->v)) return Type::unit();
                const auto& pr = as_pair(val);
                return Type::pair(ty(pr.first), ty(pr.second));
            };
            (*ctx)[n] = ty(v);
        }
        env = env.extend(n, v);
    }
    return env;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"probabilistic program transformation toolkit"};
    app.require_subcommand(1);

    // ---- parse ----
    std::string in_path, out_path;
    auto* cmd_parse = app.add_subcommand("parse", "parse a program and echo it back");
    cmd_parse->add_option("file", in_path)->required();
    cmd_parse->add_option("-o,--output", out_path);

    // ---- check ----
    std::string check_env;
    auto* cmd_check = app.add_subcommand("check", "typecheck a program");
    cmd_check->add_option("file", in_path)->required();
    cmd_check->add_option("--env", check_env, "name=value bindings for free variables");

    // ---- transform ----
    std::string pass_list, point_src, proposal_path, integrand_path, positive_list, dump_dir,
        trace_path;
    auto* cmd_tr = app.add_subcommand("transform", "apply transformation passes");
    cmd_tr->add_option("file", in_path)->required();
    cmd_tr->add_option("--pass", pass_list, "comma-separated pass list")->required();
    cmd_tr->add_option("--point", point_src, "observation point for observe/density");
    cmd_tr->add_option("--proposal", proposal_path, "proposal program file for mh");
    cmd_tr->add_option("--integrand", integrand_path, "integrand file for expect");
    cmd_tr->add_option("--positive", positive_list, "variables assumed positive");
    cmd_tr->add_option("--dump-dir", dump_dir, "directory for per-pass dumps");
    cmd_tr->add_option("--trace", trace_path, "write the simplify rewrite trace (JSON)");
    cmd_tr->add_option("-o,--output", out_path);

    // ---- sample ----
    std::size_t n = 10;
    std::uint64_t seed = 0;
    std::string env_spec;
    auto* cmd_sample = app.add_subcommand("sample", "draw weighted samples (JSON lines)");
    cmd_sample->add_option("file", in_path)->required();
    cmd_sample->add_option("--n", n)->required();
    cmd_sample->add_option("--seed", seed)->required();
    cmd_sample->add_option("--env", env_spec);

    // ---- chain ----
    std::string kernel_path, init_src;
    auto* cmd_chain = app.add_subcommand("chain", "run an MH transition kernel");
    cmd_chain->add_option("--kernel", kernel_path)->required();
    cmd_chain->add_option("--init", init_src)->required();
    cmd_chain->add_option("--n", n)->required();
    cmd_chain->add_option("--seed", seed)->required();
    cmd_chain->add_option("--env", env_spec);

    // ---- ess ----
    std::string field_path;
    auto* cmd_ess = app.add_subcommand("ess", "effective sample size of a chain field");
    cmd_ess->add_option("file", in_path)->required();
    cmd_ess->add_option("--field", field_path)->required();

    // ---- experiments ----
    auto* cmd_exp = app.add_subcommand("experiment", "run a desk-scale experiment");
    cmd_exp->require_subcommand(1);
    std::string obs_src = "(0, 1)";
    bool json_report = false;
    auto* exp_kalman = cmd_exp->add_subcommand("kalman", "linear-dynamics MH");
    exp_kalman->add_option("--seed", seed)->required();
    exp_kalman->add_option("--n", n)->required();
    exp_kalman->add_option("--obs", obs_src, "observation pair, e.g. \"(0, 1)\"");
    exp_kalman->add_flag("--json", json_report);

    std::size_t n_points = 30;
    int sweeps = 5;
    double separation = 10.0;
    auto* exp_gmm = cmd_exp->add_subcommand("gmm", "mixture labeling by Gibbs");
    exp_gmm->add_option("--seed", seed)->required();
    exp_gmm->add_option("--n-points", n_points);
    exp_gmm->add_option("--sweeps", sweeps);
    exp_gmm->add_option("--separation", separation);
    exp_gmm->add_flag("--json", json_report);

    CLI11_PARSE(app, argc, argv);
    NameSupply supply;

    if (*cmd_parse) {
        auto e = parse(read_file(in_path), supply);
        write_output(out_path, pretty(e));
        return 0;
    }

    if (*cmd_check) {
        auto e = parse(read_file(in_path), supply);
        TypeCtx ctx;
        parse_env(check_env, supply, &ctx);
        TypePtr t = typecheck(e, ctx);
        std::cout << t->to_string() << "\n";
        return 0;
    }

    if (*cmd_tr) {
        PipelineSpec spec;
        spec.program = parse(read_file(in_path), supply);
        for (const auto& v : split_commas(positive_list)) spec.assume.positive_vars.insert(v);
        bool want_trace = !trace_path.empty();
        for (const auto& name : split_commas(pass_list)) {
            PassSpec p;
            p.name = name;
            if (!point_src.empty() && (name == "observe" || name == "density")) {
                p.point = parse(point_src, supply);
            }
            if (name == "mh" && !proposal_path.empty()) {
                p.proposal = parse(read_file(proposal_path), supply);
            }
            if (name == "expect" && !integrand_path.empty()) {
                p.integrand = parse(read_file(integrand_path), supply);
            }
            if (name == "simplify") p.trace = want_trace;
            spec.passes.push_back(std::move(p));
        }
        PipelineResult res = run_pipeline(spec, supply);
        if (!dump_dir.empty()) {
            for (std::size_t i = 0; i < res.intermediates.size(); ++i) {
                std::ofstream out(dump_dir + "/" + std::to_string(i) + "-" +
                                  res.intermediates[i].first + ".ppt");
                out << pretty(res.intermediates[i].second) << "\n";
            }
        }
        if (want_trace) {
            std::ofstream out(trace_path);
            out << res.trace_json << "\n";
        }
        write_output(out_path, pretty(res.program));
        return 0;
    }

    if (*cmd_sample) {
        auto m = parse(read_file(in_path), supply);
        Env env = parse_env(env_spec, supply);
        Rng rng(seed);
        std::cout.precision(17);
        for (std::size_t i = 0; i < n; ++i) {
            auto [v, w] = sample(m, env, rng);
            std::cout << "{\"value\": " << value_to_json(v) << ", \"weight\": " << w << "}\n";
        }
        return 0;
    }

    if (*cmd_chain) {
        auto kernel = parse(read_file(kernel_path), supply);
        Env env = parse_env(env_spec, supply);
        ValuePtr init = eval(parse(init_src, supply), env);
        Rng rng(seed);
        Chain chain = run_chain(kernel, init, n, rng, env);
        std::cout.precision(17);
        for (std::size_t i = 0; i < chain.states.size(); ++i) {
            std::cout << "{\"value\": " << value_to_json(chain.states[i])
                      << ", \"weight\": 1, \"ratio\": " << chain.ratios[i]
                      << ", \"accepted\": " << (chain.accepted[i] ? "true" : "false") << "}\n";
        }
        return 0;
    }

    if (*cmd_ess) {
        std::ifstream in(in_path);
        if (!in) throw ValidationError("cannot open '" + in_path + "'");
        std::vector<double> xs;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            nlohmann::json cur = j;
            std::stringstream fp(field_path);
            std::string part;
            while (std::getline(fp, part, '.')) {
                if (part.empty()) continue;
                if (std::isdigit(static_cast<unsigned char>(part[0]))) {
                    cur = cur.at(std::stoul(part));
                } else {
                    cur = cur.at(part);
                }
            }
            xs.push_back(cur.get<double>());
        }
        std::cout.precision(17);
        std::cout << ess(xs) << "\n";
        return 0;
    }

    if (*exp_kalman) {
        auto obs = eval(parse(obs_src, supply));
        const auto& pr = as_pair(obs);
        KalmanReport rep = experiment_kalman(seed, n, as_real(pr.first), as_real(pr.second));
        if (json_report) {
            std::cout << rep.to_json() << "\n";
        } else {
            std::cout.precision(10);
            std::cout << "posterior mean noiseT: " << rep.mean_noise_t << "\n"
                      << "posterior mean noiseE: " << rep.mean_noise_e << "\n"
                      << "ESS/sample noiseT:     " << rep.ess_per_sample_t << "\n"
                      << "ESS/sample noiseE:     " << rep.ess_per_sample_e << "\n"
                      << "acceptance rate:       " << rep.accept_rate << "\n"
                      << "seconds:               " << rep.seconds << "\n";
        }
        return 0;
    }

    if (*exp_gmm) {
        GmmReport rep = experiment_gmm(seed, n_points, sweeps, separation);
        if (json_report) {
            std::cout << rep.to_json() << "\n";
        } else {
            std::cout.precision(10);
            for (std::size_t i = 0; i < rep.accuracy_per_sweep.size(); ++i) {
                std::cout << "sweep " << (i + 1) << " accuracy: " << rep.accuracy_per_sweep[i]
                          << "\n";
            }
        }
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const SyntaxError& e) {
        std::cerr << "syntax error at " << e.line << ":" << e.column << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const TypeError& e) {
        std::cerr << "type error" << (e.path.empty() ? "" : " at " + e.path) << ": " << e.what()
                  << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const TransformError& e) {
        std::cerr << "transformation error: " << e.what() << "\n";
        return kExitTransform;
    } catch (const RuntimeError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
