#include "topoplan/io.hpp"

#include <cstdio>
#include <fstream>

#include "topoplan/errors.hpp"

namespace topoplan {

namespace {

std::string fixed6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void export_heatmap(const std::vector<double>& values, int width, int height,
                    const std::filesystem::path& path) {
    if (static_cast<int>(values.size()) != width * height) {
        throw ValidationError("heatmap: value count does not match grid dimensions");
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write heatmap file: " + path.string());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (x) out << ",";
            out << fixed6(values[static_cast<std::size_t>(y * width + x)]);
        }
        out << "\n";
    }
}

std::vector<double> mode_slice(const ProductStructure& structure, const std::vector<double>& values,
                               int mode) {
    std::vector<double> out(static_cast<std::size_t>(structure.n_mdp_states), 0.0);
    for (int s = 0; s < structure.n_mdp_states; ++s) {
        int sq = structure.index_of(s, mode);
        if (sq >= 0) out[static_cast<std::size_t>(s)] = values[static_cast<std::size_t>(sq)];
    }
    return out;
}

std::vector<double> mode_slice(const ProductStructure& structure, const ValueApprox& approx, int mode) {
    std::vector<double> out(static_cast<std::size_t>(structure.n_mdp_states), 0.0);
    for (int s = 0; s < structure.n_mdp_states; ++s) {
        out[static_cast<std::size_t>(s)] = approx.value(s, mode);
    }
    return out;
}

std::string product_state_label(const ProductStructure& structure, int width, int sq) {
    int s = structure.mdp_state_of[static_cast<std::size_t>(sq)];
    int k = structure.mode_of[static_cast<std::size_t>(sq)] + 1;
    if (width > 0) {
        return "(" + std::to_string(s % width) + "," + std::to_string(s / width) + "," +
               std::to_string(k) + ")";
    }
    return "(s" + std::to_string(s) + "," + std::to_string(k) + ")";
}

void export_trace(const TraceLog& trace, const ProductStructure& structure, int width,
                  const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write trace file: " + path.string());
    out << "epoch,state,value\n";
    for (std::size_t epoch = 0; epoch < trace.values.size(); ++epoch) {
        for (std::size_t i = 0; i < trace.states.size(); ++i) {
            out << epoch << "," << product_state_label(structure, width, trace.states[i]) << ","
                << fixed6(trace.values[epoch][i]) << "\n";
        }
    }
}

void export_trajectories(std::span<const Trajectory> trajectories, const ProductStructure& structure,
                         int width, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write trajectory file: " + path.string());
    out << "run,step,state,action,reward\n";
    for (std::size_t run = 0; run < trajectories.size(); ++run) {
        const Trajectory& t = trajectories[run];
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            out << run << "," << i << "," << product_state_label(structure, width, t.steps[i].state)
                << "," << t.steps[i].action << "," << fixed6(t.steps[i].reward) << "\n";
        }
        const char* reason = t.terminated == Termination::accepting
                                 ? "accepting"
                                 : (t.terminated == Termination::sink ? "sink" : "length-cap");
        out << run << "," << t.steps.size() << ","
            << product_state_label(structure, width, t.final_state) << "," << reason << ",\n";
    }
}

nlohmann::ordered_json solve_summary(const ValueTable& table, double wall_time_s) {
    nlohmann::ordered_json j;
    j["backup_count"] = table.backup_count;
    j["sweeps"] = table.sweeps;
    j["wall_time_s"] = wall_time_s;
    j["residual"] = table.residual;
    j["converged"] = table.converged;
    return j;
}

nlohmann::ordered_json rollout_summary(const RolloutStats& stats) {
    nlohmann::ordered_json j;
    j["n_runs"] = stats.n_runs;
    j["successes"] = stats.successes;
    j["failures_sink"] = stats.failures_sink;
    j["failures_timeout"] = stats.failures_timeout;
    j["success_rate"] = stats.success_rate;
    return j;
}

nlohmann::ordered_json tadp_summary(const TadpResult& result, double wall_time_s) {
    nlohmann::ordered_json j;
    j["total_epochs"] = result.total_epochs;
    j["simulator_steps"] = result.simulator_steps;
    j["wall_time_s"] = wall_time_s;
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (const auto& level : result.levels) {
        nlohmann::ordered_json lj;
        lj["level"] = level.level;
        lj["modes"] = level.modes;
        lj["epochs"] = level.epochs;
        lj["outer_iterations"] = level.outer_iterations;
        lj["max_residual"] = level.max_residual;
        lj["mean_residual"] = level.mean_residual;
        lj["lambda"] = level.lambda;
        lj["nu"] = level.nu;
        lj["feasible"] = level.feasible;
        levels.push_back(std::move(lj));
    }
    j["levels"] = std::move(levels);
    return j;
}

void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write JSON file: " + path.string());
    out << j.dump(2) << "\n";
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << text;
}

nlohmann::ordered_json theta_dump(const ValueApprox& approx, const std::vector<std::string>& mode_names) {
    nlohmann::ordered_json j;
    j["alpha"] = approx.alpha;
    nlohmann::ordered_json modes = nlohmann::ordered_json::object();
    for (std::size_t q = 0; q < mode_names.size(); ++q) {
        nlohmann::ordered_json mj;
        if (approx.pinned[q].has_value()) {
            mj["pinned"] = *approx.pinned[q];
        } else {
            mj["theta"] = approx.theta[q];
        }
        modes[mode_names[q]] = std::move(mj);
    }
    j["modes"] = std::move(modes);
    return j;
}

}  // namespace topoplan
