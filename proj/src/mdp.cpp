#include "topoplan/mdp.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "topoplan/errors.hpp"

namespace topoplan {

const std::vector<Outcome>& LabeledMdp::distribution(int s, int a) const {
    if (s < 0 || s >= n_states) throw ValidationError("unknown state " + std::to_string(s));
    if (a < 0 || a >= n_actions) throw ValidationError("unknown action " + std::to_string(a));
    const auto& row = rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
    if (row.empty()) {
        throw ValidationError("action " + std::to_string(a) + " unavailable at state " + state_name(s));
    }
    return row;
}

std::string LabeledMdp::state_name(int s) const {
    if (s >= 0 && s < static_cast<int>(state_names.size()) && !state_names[static_cast<std::size_t>(s)].empty()) {
        return state_names[static_cast<std::size_t>(s)];
    }
    return "s" + std::to_string(s);
}

std::vector<std::string> validate_mdp(const LabeledMdp& m) {
    std::vector<std::string> violations;
    auto complain = [&](const std::string& msg) { violations.push_back(msg); };

    if (m.n_states <= 0) complain("state set is empty");
    if (m.n_actions <= 0) complain("action set is empty");
    if (m.initial < 0 || m.initial >= m.n_states) complain("initial state out of range");
    if (static_cast<int>(m.rows.size()) != m.n_states) complain("transition table has wrong state count");
    if (static_cast<int>(m.labels.size()) != m.n_states) complain("label table has wrong state count");

    const PropMask known = m.props.size() >= 32
                               ? ~PropMask{0}
                               : static_cast<PropMask>((PropMask{1} << m.props.size()) - 1);
    for (int s = 0; s < m.n_states && s < static_cast<int>(m.labels.size()); ++s) {
        if (m.labels[static_cast<std::size_t>(s)] & ~known) {
            complain("state " + m.state_name(s) + " labeled with a proposition outside AP");
        }
    }

    for (int s = 0; s < m.n_states && s < static_cast<int>(m.rows.size()); ++s) {
        const auto& per_action = m.rows[static_cast<std::size_t>(s)];
        if (static_cast<int>(per_action.size()) != m.n_actions) {
            complain("state " + m.state_name(s) + " has wrong action arity");
            continue;
        }
        bool any_action = false;
        for (int a = 0; a < m.n_actions; ++a) {
            const auto& row = per_action[static_cast<std::size_t>(a)];
            if (row.empty()) continue;
            any_action = true;
            double sum = 0;
            for (const Outcome& o : row) {
                if (o.state < 0 || o.state >= m.n_states) {
                    complain("transition (" + m.state_name(s) + ", a" + std::to_string(a) +
                             ") targets unknown state " + std::to_string(o.state));
                }
                if (o.prob < 0) {
                    complain("negative probability at (" + m.state_name(s) + ", a" + std::to_string(a) + ")");
                }
                sum += o.prob;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                std::ostringstream msg;
                msg << "row (" << m.state_name(s) << ", a" << a << ") sums to " << sum;
                complain(msg.str());
            }
        }
        if (!any_action) complain("state " + m.state_name(s) + " has no available action");
    }
    return violations;
}

LabeledMdp parse_mdp_text(const std::string& text, const std::string& origin) {
    LabeledMdp m;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::string> prop_names;
    // (s,a) -> accumulated outcomes, to catch duplicates
    std::map<std::pair<int, int>, std::map<int, double>> acc;
    std::vector<std::pair<int, std::string>> pending_labels;

    auto fail = [&](const std::string& msg) -> void {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        if (kw == "states") {
            if (!(ls >> m.n_states)) fail("states expects a count");
        } else if (kw == "actions") {
            if (!(ls >> m.n_actions)) fail("actions expects a count");
        } else if (kw == "initial") {
            if (!(ls >> m.initial)) fail("initial expects a state index");
        } else if (kw == "props") {
            std::string p;
            while (ls >> p) prop_names.push_back(p);
        } else if (kw == "label") {
            int s;
            if (!(ls >> s)) fail("label expects a state index");
            std::string p;
            while (ls >> p) pending_labels.emplace_back(s, p);
        } else if (kw == "trans") {
            int s, a, s2;
            double p;
            if (!(ls >> s >> a >> s2 >> p)) fail("trans expects: s a s' prob");
            acc[{s, a}][s2] += p;
        } else {
            fail("unrecognized keyword '" + kw + "'");
        }
    }

    if (m.n_states <= 0) throw ParseError(origin + ": missing or invalid 'states'");
    if (m.n_actions <= 0) throw ParseError(origin + ": missing or invalid 'actions'");
    m.props = PropSet(prop_names);
    m.labels.assign(static_cast<std::size_t>(m.n_states), 0);
    for (auto& [s, p] : pending_labels) {
        if (s < 0 || s >= m.n_states) throw ParseError(origin + ": label for unknown state " + std::to_string(s));
        int idx = m.props.index_of(p);
        if (idx < 0) throw ParseError(origin + ": label uses unknown proposition " + p);
        m.labels[static_cast<std::size_t>(s)] |= PropMask{1} << idx;
    }
    m.rows.assign(static_cast<std::size_t>(m.n_states),
                  std::vector<std::vector<Outcome>>(static_cast<std::size_t>(m.n_actions)));
    for (auto& [key, outcomes] : acc) {
        auto [s, a] = key;
        if (s < 0 || s >= m.n_states || a < 0 || a >= m.n_actions) {
            throw ParseError(origin + ": transition outside state/action range");
        }
        auto& row = m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
        for (auto& [s2, p] : outcomes) row.push_back({s2, p});
    }

    auto violations = validate_mdp(m);
    if (!violations.empty()) {
        throw ParseError(origin + ": invalid MDP: " + violations.front());
    }
    return m;
}

LabeledMdp load_mdp_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open MDP file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_mdp_text(buf.str(), path.string());
}

}  // namespace topoplan
