#include "topoplan/dfa.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "topoplan/errors.hpp"

namespace topoplan {

int TaskDfa::mode_index(std::string_view name) const {
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int TaskDfa::step(int q, PropMask symbol) const {
    if (q < 0 || q >= mode_count()) {
        throw ValidationError("step: unknown mode index " + std::to_string(q));
    }
    if (symbol >= alphabet_size()) {
        throw ValidationError("step: symbol mask outside 2^AP");
    }
    return delta[static_cast<std::size_t>(q)][symbol];
}

void TaskDfa::validate() const {
    const std::size_t n = modes.size();
    if (n == 0) throw ValidationError("dfa has no modes");
    if (initial < 0 || initial >= static_cast<int>(n)) throw ValidationError("dfa initial mode out of range");
    if (accepting.size() != n) throw ValidationError("dfa accepting flags size mismatch");
    if (std::none_of(accepting.begin(), accepting.end(), [](char c) { return c != 0; })) {
        throw ValidationError("dfa accepting set is empty");
    }
    if (delta.size() != n) throw ValidationError("dfa transition table size mismatch");
    const std::size_t sigma = alphabet_size();
    for (std::size_t q = 0; q < n; ++q) {
        if (delta[q].size() != sigma) {
            throw ValidationError("dfa transition row for mode " + modes[q] + " is not total");
        }
        for (int target : delta[q]) {
            if (target < 0 || target >= static_cast<int>(n)) {
                throw ValidationError("dfa transition from mode " + modes[q] + " leaves Q");
            }
        }
    }
}

RunResult run_word_from(const TaskDfa& dfa, int from, std::span<const PropMask> word) {
    RunResult r;
    r.final_mode = from;
    r.accepted = dfa.is_accepting(from);
    for (PropMask symbol : word) {
        r.final_mode = dfa.step(r.final_mode, symbol);
        r.accepted = r.accepted || dfa.is_accepting(r.final_mode);
    }
    return r;
}

RunResult run_word(const TaskDfa& dfa, std::span<const PropMask> word) {
    return run_word_from(dfa, dfa.initial, word);
}

std::vector<int> coaccessible_modes(const TaskDfa& dfa) {
    const int n = dfa.mode_count();
    // reverse transition graph over modes
    std::vector<std::vector<int>> rev(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
        for (int target : dfa.delta[static_cast<std::size_t>(q)]) {
            rev[static_cast<std::size_t>(target)].push_back(q);
        }
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::deque<int> frontier;
    for (int q = 0; q < n; ++q) {
        if (dfa.is_accepting(q)) {
            seen[static_cast<std::size_t>(q)] = 1;
            frontier.push_back(q);
        }
    }
    while (!frontier.empty()) {
        int q = frontier.front();
        frontier.pop_front();
        for (int p : rev[static_cast<std::size_t>(q)]) {
            if (!seen[static_cast<std::size_t>(p)]) {
                seen[static_cast<std::size_t>(p)] = 1;
                frontier.push_back(p);
            }
        }
    }
    std::vector<int> out;
    for (int q = 0; q < n; ++q) {
        if (seen[static_cast<std::size_t>(q)]) out.push_back(q);
    }
    return out;
}

TrimResult coaccessible_trim(const TaskDfa& dfa, const TrimOptions& options) {
    std::vector<int> keep = coaccessible_modes(dfa);
    std::vector<int> remap(dfa.modes.size(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        remap[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
    }
    if (remap[static_cast<std::size_t>(dfa.initial)] < 0) {
        throw UnsatisfiableTaskError("initial mode " + dfa.modes[static_cast<std::size_t>(dfa.initial)] +
                                     " cannot reach the accepting set");
    }

    TrimResult result;
    for (std::size_t q = 0; q < dfa.modes.size(); ++q) {
        if (remap[q] < 0) result.removed_modes.push_back(dfa.modes[q]);
    }
    if (result.removed_modes.empty()) {
        result.dfa = dfa;
        return result;
    }

    TaskDfa out;
    out.props = dfa.props;
    out.initial = remap[static_cast<std::size_t>(dfa.initial)];
    for (int q : keep) {
        out.modes.push_back(dfa.modes[static_cast<std::size_t>(q)]);
        out.accepting.push_back(dfa.accepting[static_cast<std::size_t>(q)]);
    }
    const std::size_t sigma = dfa.alphabet_size();
    bool need_dead = false;
    for (int q : keep) {
        std::vector<int> row(sigma, -1);
        for (std::size_t s = 0; s < sigma; ++s) {
            int target = dfa.delta[static_cast<std::size_t>(q)][s];
            row[s] = remap[static_cast<std::size_t>(target)];
            if (row[s] < 0) {
                need_dead = true;
                if (!options.preserve_totality) {
                    result.dangling.emplace_back(dfa.modes[static_cast<std::size_t>(q)],
                                                 static_cast<PropMask>(s));
                }
            }
        }
        out.delta.push_back(std::move(row));
    }
    if (need_dead && options.preserve_totality) {
        int dead = out.mode_count();
        out.modes.push_back("__dead");
        out.accepting.push_back(0);
        out.delta.emplace_back(sigma, dead);
        for (auto& row : out.delta) {
            for (int& t : row) {
                if (t < 0) t = dead;
            }
        }
        result.added_dead_mode = true;
        result.dead_mode = dead;
    }
    result.dfa = std::move(out);
    return result;
}

// ---------------------------------------------------------------------------
// Guard expressions and the DFA text format.

namespace {

// Grammar: expr := term ('|' term)* ; term := factor ('&' factor)* ;
// factor := '!' factor | '(' expr ')' | 'true' | 'false' | ident
struct GuardNode {
    enum Kind { kTrue, kFalse, kProp, kNot, kAnd, kOr } kind;
    int prop = -1;
    std::unique_ptr<GuardNode> lhs, rhs;
};

class GuardParser {
public:
    GuardParser(std::string_view text, const PropSet& props) : text_(text), props_(props) {}

    std::unique_ptr<GuardNode> parse() {
        auto node = parse_or();
        skip_ws();
        if (pos_ != text_.size()) {
            throw ParseError("unexpected trailing input in guard: '" + std::string(text_) + "'");
        }
        return node;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::unique_ptr<GuardNode> parse_or() {
        auto lhs = parse_and();
        while (eat('|')) {
            auto node = std::make_unique<GuardNode>();
            node->kind = GuardNode::kOr;
            node->lhs = std::move(lhs);
            node->rhs = parse_and();
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<GuardNode> parse_and() {
        auto lhs = parse_factor();
        while (eat('&')) {
            auto node = std::make_unique<GuardNode>();
            node->kind = GuardNode::kAnd;
            node->lhs = std::move(lhs);
            node->rhs = parse_factor();
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<GuardNode> parse_factor() {
        skip_ws();
        if (eat('!')) {
            auto node = std::make_unique<GuardNode>();
            node->kind = GuardNode::kNot;
            node->lhs = parse_factor();
            return node;
        }
        if (eat('(')) {
            auto node = parse_or();
            if (!eat(')')) throw ParseError("missing ')' in guard: '" + std::string(text_) + "'");
            return node;
        }
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        if (start == pos_) throw ParseError("expected identifier in guard: '" + std::string(text_) + "'");
        std::string ident(text_.substr(start, pos_ - start));
        auto node = std::make_unique<GuardNode>();
        if (ident == "true") {
            node->kind = GuardNode::kTrue;
        } else if (ident == "false") {
            node->kind = GuardNode::kFalse;
        } else {
            int idx = props_.index_of(ident);
            if (idx < 0) throw ParseError("unknown proposition '" + ident + "' in guard");
            node->kind = GuardNode::kProp;
            node->prop = idx;
        }
        return node;
    }

    std::string_view text_;
    const PropSet& props_;
    std::size_t pos_ = 0;
};

bool eval_guard(const GuardNode& node, PropMask symbol) {
    switch (node.kind) {
        case GuardNode::kTrue: return true;
        case GuardNode::kFalse: return false;
        case GuardNode::kProp: return (symbol >> node.prop) & 1u;
        case GuardNode::kNot: return !eval_guard(*node.lhs, symbol);
        case GuardNode::kAnd: return eval_guard(*node.lhs, symbol) && eval_guard(*node.rhs, symbol);
        case GuardNode::kOr: return eval_guard(*node.lhs, symbol) || eval_guard(*node.rhs, symbol);
    }
    return false;
}

std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::string strip_comment(const std::string& line) {
    auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

struct RawTransition {
    std::string from, to, guard;
    int line_no;
};

}  // namespace

TaskDfa parse_dfa(std::string_view text, std::string_view origin) {
    std::vector<std::string> prop_names;
    std::vector<std::string> mode_names;
    std::string initial_name;
    std::vector<std::string> accepting_names;
    bool default_self_loop = false;
    std::vector<RawTransition> raw;

    auto fail = [&](int line_no, const std::string& msg) -> void {
        throw ParseError(std::string(origin) + ":" + std::to_string(line_no) + ": " + msg);
    };

    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_comment(line);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        line = line.substr(first);

        auto take_keyword = [&](const char* kw) -> std::string {
            std::string prefix = std::string(kw) + ":";
            if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
            return {};
        };

        if (auto rest = take_keyword("props"); !rest.empty()) {
            prop_names = split_tokens(rest);
        } else if (auto rest = take_keyword("states"); !rest.empty()) {
            mode_names = split_tokens(rest);
        } else if (auto rest = take_keyword("initial"); !rest.empty()) {
            auto toks = split_tokens(rest);
            if (toks.size() != 1) fail(line_no, "initial expects exactly one mode");
            initial_name = toks[0];
        } else if (auto rest = take_keyword("accepting"); !rest.empty()) {
            accepting_names = split_tokens(rest);
        } else if (auto rest = take_keyword("default_self_loop"); !rest.empty()) {
            auto toks = split_tokens(rest);
            if (toks.size() != 1 || (toks[0] != "true" && toks[0] != "false")) {
                fail(line_no, "default_self_loop expects true or false");
            }
            default_self_loop = toks[0] == "true";
        } else if (auto rest = take_keyword("trans"); !rest.empty()) {
            // trans: q -> q' : guard-expr
            auto arrow = rest.find("->");
            if (arrow == std::string::npos) fail(line_no, "transition needs '->'");
            auto colon = rest.find(':', arrow);
            if (colon == std::string::npos) fail(line_no, "transition needs ': guard'");
            auto from_toks = split_tokens(rest.substr(0, arrow));
            auto to_toks = split_tokens(rest.substr(arrow + 2, colon - arrow - 2));
            if (from_toks.size() != 1 || to_toks.size() != 1) fail(line_no, "malformed transition endpoints");
            raw.push_back({from_toks[0], to_toks[0], rest.substr(colon + 1), line_no});
        } else {
            fail(line_no, "unrecognized line: '" + line + "'");
        }
    }

    if (mode_names.empty()) throw ParseError(std::string(origin) + ": no states declared");
    if (initial_name.empty()) throw ParseError(std::string(origin) + ": no initial mode declared");
    if (accepting_names.empty()) throw ParseError(std::string(origin) + ": no accepting modes declared");

    TaskDfa dfa;
    dfa.props = PropSet(prop_names);
    dfa.modes = mode_names;
    {
        std::vector<std::string> sorted = mode_names;
        std::sort(sorted.begin(), sorted.end());
        auto dup = std::adjacent_find(sorted.begin(), sorted.end());
        if (dup != sorted.end()) throw ParseError(std::string(origin) + ": duplicate mode " + *dup);
    }
    dfa.initial = dfa.mode_index(initial_name);
    if (dfa.initial < 0) throw ParseError(std::string(origin) + ": unknown initial mode " + initial_name);
    dfa.accepting.assign(mode_names.size(), 0);
    for (const auto& name : accepting_names) {
        int q = dfa.mode_index(name);
        if (q < 0) throw ParseError(std::string(origin) + ": unknown accepting mode " + name);
        dfa.accepting[static_cast<std::size_t>(q)] = 1;
    }

    const std::size_t sigma = dfa.alphabet_size();
    // Per (mode, symbol): which transition claimed it (index into per-mode list).
    dfa.delta.assign(mode_names.size(), std::vector<int>(sigma, -1));
    std::vector<std::vector<const RawTransition*>> claimed(mode_names.size(),
                                                           std::vector<const RawTransition*>(sigma, nullptr));

    for (const auto& t : raw) {
        int from = dfa.mode_index(t.from);
        if (from < 0) fail(t.line_no, "unknown mode " + t.from);
        int to = dfa.mode_index(t.to);
        if (to < 0) fail(t.line_no, "unknown mode " + t.to);
        GuardParser parser(t.guard, dfa.props);
        std::unique_ptr<GuardNode> guard;
        try {
            guard = parser.parse();
        } catch (const ParseError& e) {
            fail(t.line_no, e.what());
        }
        for (PropMask symbol = 0; symbol < sigma; ++symbol) {
            if (!eval_guard(*guard, symbol)) continue;
            auto& cell = dfa.delta[static_cast<std::size_t>(from)][symbol];
            if (cell != -1) {
                const RawTransition* prev = claimed[static_cast<std::size_t>(from)][symbol];
                std::ostringstream msg;
                msg << "guards overlap on state " << t.from << ": lines " << prev->line_no << " and "
                    << t.line_no << " both match symbol {";
                auto names = dfa.props.names_of(symbol);
                for (std::size_t i = 0; i < names.size(); ++i) msg << (i ? "," : "") << names[i];
                msg << "}";
                fail(t.line_no, msg.str());
            }
            cell = to;
            claimed[static_cast<std::size_t>(from)][symbol] = &t;
        }
    }

    for (std::size_t q = 0; q < mode_names.size(); ++q) {
        for (PropMask symbol = 0; symbol < sigma; ++symbol) {
            if (dfa.delta[q][symbol] != -1) continue;
            if (default_self_loop) {
                dfa.delta[q][symbol] = static_cast<int>(q);
            } else {
                std::ostringstream msg;
                msg << "state " << mode_names[q] << " has no transition for symbol {";
                auto names = dfa.props.names_of(symbol);
                for (std::size_t i = 0; i < names.size(); ++i) msg << (i ? "," : "") << names[i];
                msg << "} and no default_self_loop rule";
                throw ParseError(std::string(origin) + ": " + msg.str());
            }
        }
    }

    dfa.validate();
    return dfa;
}

TaskDfa load_dfa(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open DFA file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dfa(buf.str(), path.string());
}

}  // namespace topoplan
