#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "topoplan/mdp.hpp"

namespace topoplan {

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

// An impassable boundary between two 4-adjacent cells.
struct WallSegment {
    Cell a, b;
};

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kGridActionCount = 4;
inline constexpr const char* kGridActionNames[kGridActionCount] = {"U", "D", "L", "R"};

// Proposition automatically attached to obstacle cells.
inline constexpr const char* kObstacleProp = "obs";

struct GridWorldSpec {
    int width = 0;
    int height = 0;
    // Probability mass given to each wrong successor state.
    double noise = 0.0;
    Cell initial{0, 0};
    std::map<std::string, std::set<Cell>> regions;
    std::set<Cell> obstacles;
    std::vector<WallSegment> walls;

    bool in_bounds(const Cell& c) const {
        return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
    }
    int cell_index(const Cell& c) const { return c.y * width + c.x; }
    Cell cell_of(int index) const { return {index % width, index / width}; }

    // Throws ValidationError if the spec violates its invariants.
    void validate() const;

    static GridWorldSpec from_json_file(const std::filesystem::path& path);
    static GridWorldSpec from_json_text(const std::string& text, const std::string& origin = "<string>");
};

// Builds the stochastic grid world: the intended neighbor is reached with
// probability 1 - noise*|N|, every other reachable successor state with
// probability noise, where N is the set of possible successor states distinct
// from the intended one. Moves into walls or off-grid bounce back. Obstacle
// cells are absorbing and labeled with kObstacleProp.
LabeledMdp build_grid_world(const GridWorldSpec& spec);

}  // namespace topoplan
