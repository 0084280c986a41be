#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "topoplan/propositions.hpp"

namespace topoplan {

struct Outcome {
    int state = 0;
    double prob = 0.0;
};

// Finite labeled Markov decision process. Rows are sparse distributions; an
// empty row means the action is unavailable at that state. Treat instances as
// immutable after construction.
struct LabeledMdp {
    int n_states = 0;
    int n_actions = 0;
    int initial = 0;
    PropSet props;
    std::vector<PropMask> labels;                           // per state
    std::vector<std::vector<std::vector<Outcome>>> rows;    // [state][action]
    std::vector<std::string> state_names;                   // optional, for reports
    std::vector<std::string> action_names;                  // optional

    bool action_available(int s, int a) const {
        return !rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)].empty();
    }

    // P(.|s,a) as an explicit sparse distribution; throws on an unavailable
    // action or out-of-range indices.
    const std::vector<Outcome>& distribution(int s, int a) const;

    std::string state_name(int s) const;
};

// Probability rows must sum to 1 within this slack.
inline constexpr double kRowSumTolerance = 1e-9;

// Returns human-readable descriptions of every invariant violation; empty
// means the MDP is well-formed.
std::vector<std::string> validate_mdp(const LabeledMdp& m);

// Loads the sparse text format documented in docs/formats.md.
LabeledMdp load_mdp_text(const std::filesystem::path& path);
LabeledMdp parse_mdp_text(const std::string& text, const std::string& origin = "<string>");

}  // namespace topoplan
