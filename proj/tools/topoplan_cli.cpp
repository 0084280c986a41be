#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "topoplan/bench.hpp"
#include "topoplan/errors.hpp"
#include "topoplan/decomposition.hpp"
#include "topoplan/dfa.hpp"
#include "topoplan/grid_world.hpp"
#include "topoplan/io.hpp"
#include "topoplan/kernels.hpp"
#include "topoplan/mdp.hpp"
#include "topoplan/product.hpp"
#include "topoplan/rollout.hpp"
#include "topoplan/solvers.hpp"
#include "topoplan/tadp.hpp"

namespace {

using namespace topoplan;
namespace fs = std::filesystem;

struct CommonInputs {
    std::string dfa_path;
    std::string world_path;
    std::string mdp_path;
    double gamma = 0.9;
    double tau = 2.0;
    double epsilon = 1e-3;
    double alpha = 60.0;
    std::string out_dir = ".";
};

struct LoadedProblem {
    LabeledMdp mdp;
    TaskDfa dfa;
    Decomposition decomposition;
    ProductMdp product;
    ProductStructure structure;
    int grid_width = 0;
    int grid_height = 0;
    GridWorldSpec spec;  // valid when grid_width > 0
};

void add_common(CLI::App* cmd, CommonInputs& in, bool with_solver_params = true) {
    cmd->add_option("--dfa", in.dfa_path, "task DFA file")->required();
    auto* world = cmd->add_option("--world", in.world_path, "grid world JSON file");
    auto* mdp = cmd->add_option("--mdp", in.mdp_path, "labeled MDP text file");
    world->excludes(mdp);
    if (with_solver_params) {
        cmd->add_option("--gamma", in.gamma, "discount factor");
        cmd->add_option("--tau", in.tau, "softmax temperature");
        cmd->add_option("--epsilon", in.epsilon, "convergence tolerance");
        cmd->add_option("--alpha", in.alpha, "reward/value amplification");
    }
    cmd->add_option("--out-dir", in.out_dir, "output directory");
}

LoadedProblem load_problem(const CommonInputs& in) {
    LoadedProblem lp;
    if (!in.world_path.empty()) {
        lp.spec = GridWorldSpec::from_json_file(in.world_path);
        lp.mdp = build_grid_world(lp.spec);
        lp.grid_width = lp.spec.width;
        lp.grid_height = lp.spec.height;
    } else if (!in.mdp_path.empty()) {
        lp.mdp = load_mdp_text(in.mdp_path);
    } else {
        throw topoplan::ValidationError("either --world or --mdp is required");
    }
    lp.dfa = load_dfa(in.dfa_path);
    lp.decomposition = decompose(lp.mdp, lp.dfa);
    lp.product = build_product(lp.mdp, lp.decomposition.dfa, {.gamma = in.gamma, .tau = in.tau});
    for (const auto& w : lp.product.warnings()) std::cerr << "warning: " << w << "\n";
    lp.structure = extract_structure(lp.product);
    return lp;
}

nlohmann::ordered_json decomposition_json(const Decomposition& d) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json metas = nlohmann::ordered_json::array();
    for (const auto& meta : d.meta_modes) {
        nlohmann::ordered_json names = nlohmann::ordered_json::array();
        for (int q : meta) names.push_back(d.dfa.modes[static_cast<std::size_t>(q)]);
        metas.push_back(std::move(names));
    }
    j["meta_modes"] = std::move(metas);
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (const auto& level : d.levels) {
        nlohmann::ordered_json one = nlohmann::ordered_json::array();
        for (int meta : level) {
            nlohmann::ordered_json names = nlohmann::ordered_json::array();
            for (int q : d.meta_modes[static_cast<std::size_t>(meta)]) {
                names.push_back(d.dfa.modes[static_cast<std::size_t>(q)]);
            }
            one.push_back(std::move(names));
        }
        levels.push_back(std::move(one));
    }
    j["levels"] = std::move(levels);
    nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
    for (int q : d.dropped_modes) dropped.push_back(d.dfa.modes[static_cast<std::size_t>(q)]);
    j["dropped_modes"] = std::move(dropped);
    return j;
}

std::string condensation_dot(const Decomposition& d) {
    std::ostringstream out;
    out << "digraph meta_modes {\n";
    for (std::size_t i = 0; i < d.meta_modes.size(); ++i) {
        out << "  m" << i << " [label=\"{";
        for (std::size_t k = 0; k < d.meta_modes[i].size(); ++k) {
            out << (k ? "," : "") << d.dfa.modes[static_cast<std::size_t>(d.meta_modes[i][k])];
        }
        out << "}\\nlevel " << d.level_of_meta[i] << "\"];\n";
    }
    for (int u = 0; u < d.meta_graph.n; ++u) {
        for (int v : d.meta_graph.adj[static_cast<std::size_t>(u)]) {
            out << "  m" << u << " -> m" << v << ";\n";
        }
    }
    out << "}\n";
    return out.str();
}

void write_mode_heatmaps(const LoadedProblem& lp, const std::vector<double>& values,
                         const fs::path& out_dir, const std::string& prefix, double alpha) {
    if (lp.grid_width == 0) return;
    for (int q = 0; q < lp.structure.n_modes; ++q) {
        std::vector<double> slice = mode_slice(lp.structure, values, q);
        const std::string& mode = lp.decomposition.dfa.modes[static_cast<std::size_t>(q)];
        export_heatmap(slice, lp.grid_width, lp.grid_height, out_dir / (prefix + "_" + mode + ".csv"));
        if (alpha != 1.0 && alpha != 0.0) {
            for (double& v : slice) v /= alpha;
            export_heatmap(slice, lp.grid_width, lp.grid_height,
                           out_dir / (prefix + "_" + mode + "_deamplified.csv"));
        }
    }
}

int run_exact_solver(const CommonInputs& in, bool topological) {
    LoadedProblem lp = load_problem(in);
    SolveOptions opts;
    opts.epsilon = in.epsilon;
    opts.reward_scale = in.alpha;

    fs::create_directories(in.out_dir);
    auto t0 = std::chrono::steady_clock::now();
    ValueTable table;
    if (topological) {
        TviResult r = topological_value_iteration(lp.product, lp.decomposition, opts);
        table = std::move(r.table);
    } else {
        table = value_iteration(lp.product, opts);
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!table.converged) {
        std::cerr << "solver did not converge; residual " << table.residual << "\n";
        return 1;
    }

    write_mode_heatmaps(lp, table.values, in.out_dir, topological ? "tvi" : "vi", in.alpha);
    write_json(solve_summary(table, secs),
               fs::path(in.out_dir) / (topological ? "tvi_summary.json" : "vi_summary.json"));
    std::cout << solve_summary(table, secs).dump(2) << "\n";
    return 0;
}

TadpConfig tadp_config_from_json(const std::string& path) {
    TadpConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream inFile(path);
    if (!inFile) throw topoplan::ValidationError("cannot open TADP config: " + path);
    nlohmann::json j = nlohmann::json::parse(inFile);
    auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("gamma", cfg.gamma);
    get("tau", cfg.tau);
    get("epsilon", cfg.epsilon);
    get("alpha", cfg.alpha);
    get("b", cfg.b);
    get("eta", cfg.eta);
    get("nu0", cfg.nu0);
    get("nu_max", cfg.nu_max);
    get("lambda0", cfg.lambda0);
    get("n_trajectories", cfg.n_trajectories);
    get("max_traj_len", cfg.max_traj_len);
    get("sigma", cfg.sigma);
    get("center_interval", cfg.center_interval);
    get("seed", cfg.seed);
    get("eta_warmup", cfg.eta_warmup);
    get("eta_decay", cfg.eta_decay);
    get("eta_outer_decay", cfg.eta_outer_decay);
    get("grad_clip", cfg.grad_clip);
    get("theta_bound", cfg.theta_bound);
    get("model_samples", cfg.model_samples);
    get("feasibility_tol", cfg.feasibility_tol);
    get("inner_epoch_cap", cfg.inner_epoch_cap);
    get("outer_iteration_cap", cfg.outer_iteration_cap);
    get("polish_epoch_cap", cfg.polish_epoch_cap);
    get("level_epoch_cap", cfg.level_epoch_cap);
    get("stable_epochs", cfg.stable_epochs);
    get("theta_init", cfg.theta_init);
    get("reward_substitution", cfg.reward_substitution);
    get("trace_states", cfg.trace_states);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planner for temporal-task objectives on labeled MDPs: exact and topological "
                 "value iteration plus model-free kernel ADP"};
    app.require_subcommand(1);

    CommonInputs in;

    auto* decompose_cmd = app.add_subcommand("decompose", "print meta-modes, levels, dropped modes");
    bool emit_dot = false;
    add_common(decompose_cmd, in, false);
    decompose_cmd->add_option("--gamma", in.gamma, "discount factor (product validation)");
    decompose_cmd->add_flag("--dot", emit_dot, "also write condensation.dot");

    auto* vi_cmd = app.add_subcommand("solve-vi", "exact softmax value iteration");
    add_common(vi_cmd, in);

    auto* tvi_cmd = app.add_subcommand("solve-tvi", "topological value iteration over level sets");
    add_common(tvi_cmd, in);

    auto* tadp_cmd = app.add_subcommand("solve-tadp", "model-free topological ADP");
    std::string tadp_config_path;
    std::uint64_t tadp_seed = 1;
    bool seed_given = false;
    add_common(tadp_cmd, in);
    tadp_cmd->add_option("--config", tadp_config_path, "TADP hyperparameter JSON");
    tadp_cmd->add_option("--seed", tadp_seed, "RNG seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });

    auto* sim_cmd = app.add_subcommand("simulate", "rollout statistics for a solved policy");
    std::string sim_solver = "tvi";
    std::string sim_start;
    long long sim_runs = 500;
    int sim_cap = 500;
    std::uint64_t sim_seed = 7;
    std::string sim_policy = "auto";
    std::string sim_tadp_config;
    add_common(sim_cmd, in);
    sim_cmd->add_option("--solver", sim_solver, "vi | tvi | tadp")
        ->check(CLI::IsMember({"vi", "tvi", "tadp"}));
    sim_cmd->add_option("--start", sim_start, "start product state as x,y,mode (1-based mode index)");
    sim_cmd->add_option("--runs", sim_runs, "number of rollouts");
    sim_cmd->add_option("--step-cap", sim_cap, "max steps per rollout");
    sim_cmd->add_option("--seed", sim_seed, "rollout RNG seed");
    sim_cmd->add_option("--policy", sim_policy, "softmax | greedy | auto")
        ->check(CLI::IsMember({"softmax", "greedy", "auto"}));
    sim_cmd->add_option("--config", sim_tadp_config, "TADP hyperparameter JSON");
    int sim_dump = 0;
    sim_cmd->add_option("--dump-trajectories", sim_dump, "also write the first N rollouts as CSV");

    auto* bench_cmd = app.add_subcommand("bench", "compare solver work and run-times");
    std::vector<std::string> bench_solvers{"vi", "tvi"};
    std::string bench_tadp_config;
    std::optional<int> bench_rollouts;
    add_common(bench_cmd, in);
    bench_cmd->add_option("--solvers", bench_solvers, "subset of vi tvi tadp");
    bench_cmd->add_option("--config", bench_tadp_config, "TADP hyperparameter JSON");
    int bench_rollout_runs = 0;
    bench_cmd->add_option("--rollouts", bench_rollout_runs, "evaluate each policy with N rollouts");

    auto* dump_cmd = app.add_subcommand("dump-product", "sparse text dump of the product MDP");
    add_common(dump_cmd, in);

    CLI11_PARSE(app, argc, argv);

    try {
        if (decompose_cmd->parsed()) {
            LoadedProblem lp = load_problem(in);
            nlohmann::ordered_json j = decomposition_json(lp.decomposition);
            std::cout << j.dump(2) << "\n";
            fs::create_directories(in.out_dir);
            write_json(j, fs::path(in.out_dir) / "decomposition.json");
            if (emit_dot) {
                write_text(condensation_dot(lp.decomposition), fs::path(in.out_dir) / "condensation.dot");
            }
            return 0;
        }
        if (vi_cmd->parsed()) return run_exact_solver(in, false);
        if (tvi_cmd->parsed()) return run_exact_solver(in, true);

        if (tadp_cmd->parsed()) {
            TadpConfig cfg = tadp_config_from_json(tadp_config_path);
            cfg.gamma = in.gamma;
            cfg.tau = in.tau;
            if (seed_given) cfg.seed = tadp_seed;
            LoadedProblem lp = load_problem(in);
            // TODO: accept an explicit kernel-center list so solve-tadp also
            // covers generic MDPs loaded with --mdp
            if (lp.grid_width == 0) throw topoplan::ValidationError("solve-tadp currently requires a grid world");
            KernelBasis basis(lp.mdp, grid_centers(lp.spec, cfg.center_interval), cfg.sigma);

            fs::create_directories(in.out_dir);
            auto t0 = std::chrono::steady_clock::now();
            TadpResult result = tadp_solve(lp.product, lp.decomposition, basis, cfg);
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            for (int q = 0; q < lp.structure.n_modes; ++q) {
                std::vector<double> slice = mode_slice(lp.structure, result.approx, q);
                export_heatmap(slice, lp.grid_width, lp.grid_height,
                               fs::path(in.out_dir) /
                                   ("tadp_" + lp.decomposition.dfa.modes[static_cast<std::size_t>(q)] +
                                    ".csv"));
            }
            export_trace(result.trace, lp.structure, lp.grid_width,
                         fs::path(in.out_dir) / "tadp_convergence.csv");
            write_json(theta_dump(result.approx, lp.decomposition.dfa.modes),
                       fs::path(in.out_dir) / "tadp_theta.json");
            write_json(tadp_summary(result, secs), fs::path(in.out_dir) / "tadp_summary.json");
            std::cout << tadp_summary(result, secs).dump(2) << "\n";
            return 0;
        }

        if (sim_cmd->parsed()) {
            LoadedProblem lp = load_problem(in);
            SnapshotSimulator sim(lp.product);

            int start = lp.product.initial();
            if (!sim_start.empty()) {
                int x, y, mode;
                if (std::sscanf(sim_start.c_str(), "%d,%d,%d", &x, &y, &mode) != 3) {
                    throw topoplan::ValidationError("--start expects x,y,mode");
                }
                if (lp.grid_width == 0) throw topoplan::ValidationError("--start x,y,mode requires a grid world");
                start = lp.structure.index_of(lp.spec.cell_index({x, y}), mode - 1);
                if (start < 0) throw topoplan::ValidationError("start state not present in the product");
            }

            SoftPolicy policy;
            if (sim_solver == "tadp") {
                TadpConfig cfg = tadp_config_from_json(sim_tadp_config);
                cfg.gamma = in.gamma;
                cfg.tau = in.tau;
                KernelBasis basis(lp.mdp, grid_centers(lp.spec, cfg.center_interval), cfg.sigma);
                TadpResult result = tadp_solve(lp.product, lp.decomposition, basis, cfg);
                policy = std::move(result.policy);
                if (sim_policy == "greedy") {
                    SoftPolicy greedy = policy;
                    for (std::size_t sq = 0; sq < greedy.dist.size(); ++sq) {
                        int best = -1;
                        for (std::size_t a = 0; a < greedy.dist[sq].size(); ++a) {
                            if (greedy.dist[sq][a] <= 0) continue;
                            if (best < 0 || greedy.q_values[sq][a] > greedy.q_values[sq][best]) {
                                best = static_cast<int>(a);
                            }
                        }
                        for (auto& x : greedy.dist[sq]) x = 0;
                        if (best >= 0) greedy.dist[sq][best] = 1.0;
                    }
                    policy = std::move(greedy);
                }
            } else {
                SolveOptions opts;
                opts.epsilon = in.epsilon;
                opts.reward_scale = in.alpha;
                ValueTable table;
                if (sim_solver == "tvi") {
                    table = topological_value_iteration(lp.product, lp.decomposition, opts).table;
                } else {
                    table = value_iteration(lp.product, opts);
                }
                // exact solutions default to greedy execution; softmax on request
                bool greedy = sim_policy != "softmax";
                policy = greedy ? extract_greedy_policy(lp.product, table.values, opts)
                                : extract_policy(lp.product, table.values, opts);
            }

            RolloutStats stats =
                simulate_policy(sim, lp.structure, policy, start, sim_runs, sim_cap, sim_seed);
            fs::create_directories(in.out_dir);
            write_json(rollout_summary(stats), fs::path(in.out_dir) / "simulate_summary.json");
            if (sim_dump > 0) {
                std::vector<Trajectory> sample;
                for (int run = 0; run < sim_dump; ++run) {
                    Rng rng(derive_seed(sim_seed, kStreamRollout, static_cast<std::uint64_t>(run)));
                    sample.push_back(
                        sample_trajectory(sim, lp.structure, policy, start, sim_cap, rng));
                }
                export_trajectories(sample, lp.structure, lp.grid_width,
                                    fs::path(in.out_dir) / "trajectories.csv");
            }
            std::cout << rollout_summary(stats).dump(2) << "\n";
            return 0;
        }

        if (bench_cmd->parsed()) {
            LoadedProblem lp = load_problem(in);
            BenchRequest request;
            request.solvers = bench_solvers;
            request.solve_options.epsilon = in.epsilon;
            request.solve_options.reward_scale = in.alpha;
            request.tadp_config = tadp_config_from_json(bench_tadp_config);
            request.tadp_config.gamma = in.gamma;
            request.tadp_config.tau = in.tau;
            if (bench_rollout_runs > 0) request.rollout_runs = bench_rollout_runs;

            KernelBasis basis(lp.mdp,
                              lp.grid_width > 0
                                  ? grid_centers(lp.spec, request.tadp_config.center_interval)
                                  : std::vector<int>{0},
                              request.tadp_config.sigma);
            BenchReport report = bench(lp.mdp, lp.dfa, basis, request);
            fs::create_directories(in.out_dir);
            write_json(bench_json(report), fs::path(in.out_dir) / "bench.json");
            write_text(bench_csv(report), fs::path(in.out_dir) / "bench.csv");
            std::cout << bench_json(report).dump(2) << "\n";
            return 0;
        }

        if (dump_cmd->parsed()) {
            LoadedProblem lp = load_problem(in);
            fs::create_directories(in.out_dir);
            std::ofstream out(fs::path(in.out_dir) / "product.txt");
            dump_product(lp.product, out);
            std::cout << "wrote " << (fs::path(in.out_dir) / "product.txt").string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
