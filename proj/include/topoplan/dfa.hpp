#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topoplan/propositions.hpp"

namespace topoplan {

// Deterministic finite automaton over symbols drawn from 2^AP. The transition
// table is total: delta[q][symbol] is defined for every mode q and every
// symbol mask.
struct TaskDfa {
    PropSet props;
    std::vector<std::string> modes;
    int initial = 0;
    std::vector<char> accepting;            // per mode
    std::vector<std::vector<int>> delta;    // [mode][symbol mask] -> mode

    int mode_count() const { return static_cast<int>(modes.size()); }
    std::size_t alphabet_size() const { return props.alphabet_size(); }

    // Index of a mode by name, or -1.
    int mode_index(std::string_view name) const;

    // delta(q, symbol); throws on out-of-range mode or symbol.
    int step(int q, PropMask symbol) const;

    bool is_accepting(int q) const { return accepting[static_cast<std::size_t>(q)] != 0; }

    // Checks totality, determinism-by-construction and membership invariants;
    // throws ValidationError on the first violation.
    void validate() const;
};

struct RunResult {
    int final_mode = 0;
    // True iff some prefix of the word (including the empty prefix) reaches F.
    bool accepted = false;
};

// Folds step over the word starting at the initial mode.
RunResult run_word(const TaskDfa& dfa, std::span<const PropMask> word);
// Same, starting at an arbitrary mode.
RunResult run_word_from(const TaskDfa& dfa, int from, std::span<const PropMask> word);

struct TrimOptions {
    // When trimming leaves a surviving mode with a transition into a removed
    // mode, redirect it to a fresh absorbing dead mode so delta stays total.
    // With this off such transitions are reported in `dangling` instead and
    // point at the dead placeholder -1.
    bool preserve_totality = true;
};

struct TrimResult {
    TaskDfa dfa;
    std::vector<std::string> removed_modes;
    bool added_dead_mode = false;
    int dead_mode = -1;
    // (mode name, symbol mask) pairs left dangling when totality is not preserved.
    std::vector<std::pair<std::string, PropMask>> dangling;
    bool changed() const { return !removed_modes.empty(); }
};

// Restricts the automaton to modes from which F is reachable in the
// transition graph. Throws UnsatisfiableTaskError if the initial mode is not
// coaccessible.
TrimResult coaccessible_trim(const TaskDfa& dfa, const TrimOptions& options = {});

// Modes from which F is reachable (indices into dfa.modes).
std::vector<int> coaccessible_modes(const TaskDfa& dfa);

// Parses the documented DFA text format; see docs/formats.md.
TaskDfa parse_dfa(std::string_view text, std::string_view origin = "<string>");
TaskDfa load_dfa(const std::filesystem::path& path);

}  // namespace topoplan
