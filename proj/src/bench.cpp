#include "topoplan/bench.hpp"

#include <chrono>
#include <sstream>

#include "topoplan/product.hpp"
#include "topoplan/rollout.hpp"

namespace topoplan {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

BenchReport bench(const LabeledMdp& m, const TaskDfa& dfa, const KernelBasis& basis,
                  const BenchRequest& request) {
    BenchReport report;

    auto t0 = std::chrono::steady_clock::now();
    Decomposition d = decompose(m, dfa);
    report.decompose_time_s = seconds_since(t0);

    ProductOptions popts;
    popts.gamma = request.tadp_config.gamma;
    popts.tau = request.tadp_config.tau;
    ProductMdp product = build_product(m, d.dfa, popts);
    ProductStructure structure = extract_structure(product);
    SnapshotSimulator sim(product);

    int start = request.rollout_start >= 0 ? request.rollout_start : product.initial();

    auto maybe_rollout = [&](BenchEntry& entry, const SoftPolicy& policy) {
        if (!request.rollout_runs) return;
        RolloutStats stats = simulate_policy(sim, structure, policy, start, *request.rollout_runs,
                                             request.rollout_step_cap, request.rollout_seed);
        entry.success_rate = stats.success_rate;
        entry.n_runs = stats.n_runs;
    };

    for (const std::string& solver : request.solvers) {
        BenchEntry entry;
        entry.solver = solver;
        auto start_time = std::chrono::steady_clock::now();
        try {
            if (solver == "vi") {
                ValueTable table = value_iteration(product, request.solve_options);
                entry.wall_time_s = seconds_since(start_time);
                entry.backups = table.backup_count;
                maybe_rollout(entry, extract_policy(product, table.values, request.solve_options));
            } else if (solver == "tvi") {
                TviResult tvi = topological_value_iteration(product, d, request.solve_options);
                entry.wall_time_s = seconds_since(start_time);
                entry.backups = tvi.table.backup_count;
                maybe_rollout(entry, extract_policy(product, tvi.table.values, request.solve_options));
            } else if (solver == "tadp") {
                TadpResult result = tadp_solve(structure, sim, d, basis, request.tadp_config);
                entry.wall_time_s = seconds_since(start_time);
                entry.epochs = result.total_epochs;
                maybe_rollout(entry, result.policy);
            } else {
                entry.failed = true;
                entry.error = "unknown solver '" + solver + "'";
            }
        } catch (const std::exception& e) {
            entry.wall_time_s = seconds_since(start_time);
            entry.failed = true;
            entry.error = e.what();
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

nlohmann::ordered_json bench_json(const BenchReport& report) {
    nlohmann::ordered_json j;
    j["decompose_time_s"] = report.decompose_time_s;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        nlohmann::ordered_json ej;
        ej["solver"] = e.solver;
        ej["wall_time_s"] = e.wall_time_s;
        ej["backups"] = e.backups;
        ej["epochs"] = e.epochs;
        if (e.success_rate) {
            ej["success_rate"] = *e.success_rate;
            ej["n_runs"] = e.n_runs;
        }
        if (e.failed) ej["error"] = e.error;
        entries.push_back(std::move(ej));
    }
    j["solvers"] = std::move(entries);
    return j;
}

std::string bench_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "solver,wall_time_s,backups,epochs,success_rate,n_runs,error\n";
    for (const auto& e : report.entries) {
        out << e.solver << "," << e.wall_time_s << "," << e.backups << "," << e.epochs << ",";
        if (e.success_rate) out << *e.success_rate;
        out << "," << e.n_runs << "," << (e.failed ? e.error : "") << "\n";
    }
    return out.str();
}

}  // namespace topoplan
