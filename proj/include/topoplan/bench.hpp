#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "topoplan/kernels.hpp"
#include "topoplan/tadp.hpp"

namespace topoplan {

struct BenchRequest {
    std::vector<std::string> solvers;  // any of "vi", "tvi", "tadp"
    SolveOptions solve_options;        // shared by vi/tvi
    TadpConfig tadp_config;
    // Rollout evaluation of each solver's policy (optional).
    std::optional<int> rollout_runs;
    int rollout_step_cap = 500;
    int rollout_start = -1;  // -1: product initial state
    std::uint64_t rollout_seed = 7;
};

struct BenchEntry {
    std::string solver;
    double wall_time_s = 0.0;
    long long backups = 0;   // exact solvers
    long long epochs = 0;    // tadp
    std::optional<double> success_rate;
    long long n_runs = 0;
    bool failed = false;
    std::string error;
};

struct BenchReport {
    double decompose_time_s = 0.0;
    std::vector<BenchEntry> entries;
};

// Runs each requested solver single-threaded, recording wall time and
// work counters; per-solver failures are recorded and the rest continue.
BenchReport bench(const LabeledMdp& m, const TaskDfa& dfa, const KernelBasis& basis,
                  const BenchRequest& request);

nlohmann::ordered_json bench_json(const BenchReport& report);
std::string bench_csv(const BenchReport& report);

}  // namespace topoplan
