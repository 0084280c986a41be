#include "topoplan/grid_world.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "topoplan/errors.hpp"

namespace topoplan {

namespace {

constexpr int kDx[kGridActionCount] = {0, 0, -1, 1};
constexpr int kDy[kGridActionCount] = {1, -1, 0, 0};

bool wall_blocks(const GridWorldSpec& spec, const Cell& a, const Cell& b) {
    for (const WallSegment& w : spec.walls) {
        if ((w.a == a && w.b == b) || (w.a == b && w.b == a)) return true;
    }
    return false;
}

Cell parse_cell(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) throw ParseError(what + " must be a [x, y] pair");
    return Cell{j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

void GridWorldSpec::validate() const {
    if (width <= 0 || height <= 0) throw ValidationError("grid dimensions must be positive");
    if (noise < 0) throw ValidationError("noise must be non-negative");
    // At most 3 wrong successor states exist (4 directions minus the intended one).
    if (noise * 3.0 > 1.0 + 1e-12) throw ValidationError("noise too large for a valid distribution");
    if (!in_bounds(initial)) throw ValidationError("initial cell outside the grid");
    if (obstacles.count(initial)) throw ValidationError("initial cell is an obstacle");
    for (const Cell& c : obstacles) {
        if (!in_bounds(c)) throw ValidationError("obstacle cell outside the grid");
    }
    for (const auto& [name, cells] : regions) {
        if (name == kObstacleProp) throw ValidationError("region name 'obs' is reserved for obstacles");
        for (const Cell& c : cells) {
            if (!in_bounds(c)) throw ValidationError("region '" + name + "' has a cell outside the grid");
        }
    }
    for (const WallSegment& w : walls) {
        int manhattan = std::abs(w.a.x - w.b.x) + std::abs(w.a.y - w.b.y);
        if (manhattan != 1 || !in_bounds(w.a) || !in_bounds(w.b)) {
            throw ValidationError("wall segment must join two adjacent in-grid cells");
        }
    }
}

LabeledMdp build_grid_world(const GridWorldSpec& spec) {
    spec.validate();

    LabeledMdp m;
    m.n_states = spec.width * spec.height;
    m.n_actions = kGridActionCount;
    m.initial = spec.cell_index(spec.initial);

    std::vector<std::string> prop_names;
    for (const auto& [name, cells] : spec.regions) prop_names.push_back(name);
    if (!spec.obstacles.empty()) prop_names.push_back(kObstacleProp);
    m.props = PropSet(prop_names);

    m.labels.assign(static_cast<std::size_t>(m.n_states), 0);
    for (const auto& [name, cells] : spec.regions) {
        int idx = m.props.index_of(name);
        for (const Cell& c : cells) {
            m.labels[static_cast<std::size_t>(spec.cell_index(c))] |= PropMask{1} << idx;
        }
    }
    if (!spec.obstacles.empty()) {
        int idx = m.props.index_of(kObstacleProp);
        for (const Cell& c : spec.obstacles) {
            m.labels[static_cast<std::size_t>(spec.cell_index(c))] |= PropMask{1} << idx;
        }
    }

    m.state_names.resize(static_cast<std::size_t>(m.n_states));
    for (int s = 0; s < m.n_states; ++s) {
        Cell c = spec.cell_of(s);
        m.state_names[static_cast<std::size_t>(s)] =
            "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
    }
    m.action_names = {kGridActionNames[0], kGridActionNames[1], kGridActionNames[2], kGridActionNames[3]};

    m.rows.assign(static_cast<std::size_t>(m.n_states),
                  std::vector<std::vector<Outcome>>(kGridActionCount));

    for (int s = 0; s < m.n_states; ++s) {
        Cell c = spec.cell_of(s);
        if (spec.obstacles.count(c)) {
            for (int a = 0; a < kGridActionCount; ++a) {
                m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = {{s, 1.0}};
            }
            continue;
        }
        // Where each direction actually lands, wall bounces folded into s.
        int landing[kGridActionCount];
        for (int d = 0; d < kGridActionCount; ++d) {
            Cell n{c.x + kDx[d], c.y + kDy[d]};
            landing[d] = (spec.in_bounds(n) && !wall_blocks(spec, c, n)) ? spec.cell_index(n) : s;
        }
        for (int a = 0; a < kGridActionCount; ++a) {
            int intended = landing[a];
            std::vector<int> wrong;
            for (int d = 0; d < kGridActionCount; ++d) {
                if (d == a) continue;
                if (landing[d] == intended) continue;
                if (std::find(wrong.begin(), wrong.end(), landing[d]) == wrong.end()) {
                    wrong.push_back(landing[d]);
                }
            }
            std::vector<Outcome> row;
            row.push_back({intended, 1.0 - spec.noise * static_cast<double>(wrong.size())});
            for (int w : wrong) row.push_back({w, spec.noise});
            std::sort(row.begin(), row.end(), [](const Outcome& l, const Outcome& r) {
                return l.state < r.state;
            });
            m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = std::move(row);
        }
    }

    return m;
}

GridWorldSpec GridWorldSpec::from_json_text(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    GridWorldSpec spec;
    try {
        spec.width = j.at("width").get<int>();
        spec.height = j.at("height").get<int>();
        spec.noise = j.at("noise").get<double>();
        spec.initial = parse_cell(j.at("initial"), "initial");
        if (j.contains("regions")) {
            for (auto& [name, cells] : j.at("regions").items()) {
                std::set<Cell> set;
                for (auto& c : cells) set.insert(parse_cell(c, "region '" + name + "' cell"));
                spec.regions[name] = std::move(set);
            }
        }
        if (j.contains("obstacles")) {
            for (auto& c : j.at("obstacles")) spec.obstacles.insert(parse_cell(c, "obstacle cell"));
        }
        if (j.contains("walls")) {
            for (auto& w : j.at("walls")) {
                if (!w.is_array() || w.size() != 2) throw ParseError("wall must be a pair of cells");
                spec.walls.push_back({parse_cell(w[0], "wall cell"), parse_cell(w[1], "wall cell")});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    spec.validate();
    return spec;
}

GridWorldSpec GridWorldSpec::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open grid world file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str(), path.string());
}

}  // namespace topoplan
