#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "topoplan/rollout.hpp"
#include "topoplan/simulator.hpp"
#include "topoplan/solvers.hpp"
#include "topoplan/tadp.hpp"

namespace topoplan {

// Writes a CSV matrix of per-cell values for one mode: row i holds grid row
// y = i, column j holds x = j, fixed 6-decimal formatting.
void export_heatmap(const std::vector<double>& values, int width, int height,
                    const std::filesystem::path& path);

// Slices a product-wide value table into the per-cell values of one mode.
std::vector<double> mode_slice(const ProductStructure& structure, const std::vector<double>& values,
                               int mode);
std::vector<double> mode_slice(const ProductStructure& structure, const ValueApprox& approx, int mode);

// Formats a product state as "(x,y,k)" with k the 1-based mode index; falls
// back to "(s<index>,k)" off-grid.
std::string product_state_label(const ProductStructure& structure, int width, int sq);

// Convergence CSV: header epoch,state,value; one row per traced state per epoch.
void export_trace(const TraceLog& trace, const ProductStructure& structure, int width,
                  const std::filesystem::path& path);

// Debug dump: run,step,state,action,reward rows plus a terminal row per
// trajectory.
void export_trajectories(std::span<const Trajectory> trajectories, const ProductStructure& structure,
                         int width, const std::filesystem::path& path);

nlohmann::ordered_json solve_summary(const ValueTable& table, double wall_time_s);
nlohmann::ordered_json rollout_summary(const RolloutStats& stats);
nlohmann::ordered_json tadp_summary(const TadpResult& result, double wall_time_s);

void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

// Per-mode theta dump for a converged approximation.
nlohmann::ordered_json theta_dump(const ValueApprox& approx, const std::vector<std::string>& mode_names);

}  // namespace topoplan
