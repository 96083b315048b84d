#include "phyjump/tree.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

namespace phyjump {

TreeParseError::TreeParseError(std::string message, std::size_t position)
    : message_(std::move(message) + " (at offset " + std::to_string(position) + ")"),
      position_(position) {}

// ---------------------------------------------------------------------------
// Tree queries
// ---------------------------------------------------------------------------

double Tree::total_branch_length() const {
    double total = 0.0;
    for (int i = 1; i < num_nodes(); ++i) {
        total += nodes[i].branch_length;
    }
    return total;
}

int Tree::num_leaves() const {
    int count = 0;
    for (const auto& node : nodes) {
        count += node.children.empty() ? 1 : 0;
    }
    return count;
}

int Tree::num_observations() const {
    int count = 0;
    for (const auto& node : nodes) {
        count += static_cast<int>(node.observations.size());
    }
    return count;
}

int Tree::subtree_leaves(int node) const {
    std::vector<int> counts(nodes.size(), 0);
    for (int i = num_nodes() - 1; i >= 0; --i) {
        if (nodes[i].children.empty()) {
            counts[i] = 1;
        }
        if (i > 0) {
            counts[nodes[i].parent] += counts[i];
        }
    }
    return counts[node];
}

std::vector<double> Tree::node_times() const {
    std::vector<double> times(nodes.size(), 0.0);
    for (int i = 1; i < num_nodes(); ++i) {
        times[i] = times[nodes[i].parent] + nodes[i].branch_length;
    }
    return times;
}

double Tree::height() const {
    const auto times = node_times();
    return times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
}

std::optional<int> Tree::find_label(std::string_view label) const {
    for (int i = 0; i < num_nodes(); ++i) {
        if (!nodes[i].label.empty() && nodes[i].label == label) {
            return i;
        }
    }
    return std::nullopt;
}

void Tree::validate() const {
    if (nodes.empty()) {
        throw std::invalid_argument("tree has no nodes");
    }
    if (nodes[0].parent != -1) {
        throw std::invalid_argument("node 0 must be the root");
    }
    bool positive_branch = num_nodes() == 1;
    for (int i = 1; i < num_nodes(); ++i) {
        const auto& node = nodes[i];
        if (node.parent < 0 || node.parent >= i) {
            throw std::invalid_argument("node ids must be preorder with a single root");
        }
        if (!(node.branch_length >= 0.0)) {
            throw std::invalid_argument("negative or NaN branch length at node " +
                                        std::to_string(i));
        }
        positive_branch = positive_branch || node.branch_length > 0.0;
    }
    if (!positive_branch) {
        throw std::invalid_argument("all branch lengths are zero");
    }
    for (int i = 0; i < num_nodes(); ++i) {
        for (int child : nodes[i].children) {
            if (child <= i || child >= num_nodes() || nodes[child].parent != i) {
                throw std::invalid_argument("inconsistent parent/child links");
            }
        }
        for (int value : nodes[i].observations) {
            if (value < 0 || value >= alphabet_size) {
                throw std::invalid_argument("observation value " + std::to_string(value) +
                                            " outside alphabet of size " +
                                            std::to_string(alphabet_size));
            }
        }
    }
    std::unordered_map<std::string_view, int> seen;
    for (int i = 0; i < num_nodes(); ++i) {
        if (nodes[i].label.empty()) {
            continue;
        }
        if (!seen.emplace(nodes[i].label, i).second) {
            throw std::invalid_argument("duplicate node label '" + nodes[i].label + "'");
        }
    }
}

// ---------------------------------------------------------------------------
// Newick parsing
// ---------------------------------------------------------------------------

namespace {

struct RawNode {
    std::string label;
    double branch_length = 1.0;   // default when no ':' suffix is present
    int parent = -1;
    std::vector<int> children;
};

class NewickScanner {
public:
    explicit NewickScanner(std::string_view text) : text_(text) {}

    std::vector<RawNode> run(int& root) {
        skip_filler();
        root = parse_subtree();
        skip_filler();
        if (pos_ >= text_.size() || text_[pos_] != ';') {
            throw TreeParseError("missing ';' terminator", pos_);
        }
        ++pos_;
        skip_filler();
        if (pos_ < text_.size()) {
            throw TreeParseError("trailing content after ';'", pos_);
        }
        return std::move(nodes_);
    }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_filler() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '[') {
                skip_comment();
            } else {
                break;
            }
        }
    }

    void skip_comment() {
        const std::size_t start = pos_;
        int depth = 0;
        while (pos_ < text_.size()) {
            const char c = text_[pos_++];
            if (c == '[') {
                ++depth;
            } else if (c == ']' && --depth == 0) {
                return;
            }
        }
        throw TreeParseError("unterminated '[' comment", start);
    }

    int parse_subtree() {
        skip_filler();
        std::vector<int> children;
        if (peek() == '(') {
            const std::size_t open = pos_;
            ++pos_;
            for (;;) {
                children.push_back(parse_subtree());
                skip_filler();
                if (peek() == ',') {
                    ++pos_;
                } else {
                    break;
                }
            }
            if (peek() != ')') {
                throw TreeParseError("unbalanced '('", open);
            }
            ++pos_;
        }
        skip_filler();
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[id].label = parse_label();
        skip_filler();
        if (peek() == ':') {
            ++pos_;
            nodes_[id].branch_length = parse_number();
        }
        for (int child : children) {
            nodes_[child].parent = id;
        }
        nodes_[id].children = std::move(children);
        return id;
    }

    std::string parse_label() {
        const char c = peek();
        if (c == '\'' || c == '"') {
            return parse_quoted(c);
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (ch == '(' || ch == ')' || ch == ',' || ch == ':' || ch == ';' || ch == '[' ||
                std::isspace(static_cast<unsigned char>(ch))) {
                break;
            }
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string parse_quoted(char quote) {
        const std::size_t start = pos_++;
        std::string label;
        while (pos_ < text_.size()) {
            const char ch = text_[pos_++];
            if (ch == quote) {
                if (pos_ < text_.size() && text_[pos_] == quote) {
                    label += quote;  // doubled quote escapes itself
                    ++pos_;
                } else {
                    return label;
                }
            } else {
                label += ch;
            }
        }
        throw TreeParseError("unterminated quoted label", start);
    }

    double parse_number() {
        skip_filler();
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (ch == '(' || ch == ')' || ch == ',' || ch == ';' || ch == '[' ||
                std::isspace(static_cast<unsigned char>(ch))) {
                break;
            }
            ++pos_;
        }
        const std::string_view token = text_.substr(start, pos_ - start);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
            throw TreeParseError("bad branch length '" + std::string(token) + "'", start);
        }
        if (!(value >= 0.0)) {
            throw TreeParseError("negative branch length", start);
        }
        return value;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<RawNode> nodes_;
};

}  // namespace

Tree parse_newick(std::string_view text) {
    int raw_root = -1;
    NewickScanner scanner(text);
    const std::vector<RawNode> raw = scanner.run(raw_root);

    // Renumber to preorder so the root is node 0 and ids are stable across
    // serialize/parse round trips.
    Tree tree;
    tree.nodes.resize(raw.size());
    std::vector<int> new_id(raw.size(), -1);
    std::vector<int> stack{raw_root};
    int next = 0;
    while (!stack.empty()) {
        const int old = stack.back();
        stack.pop_back();
        const int id = next++;
        new_id[old] = id;
        tree.nodes[id].label = raw[old].label;
        tree.nodes[id].branch_length = raw[old].branch_length;
        tree.nodes[id].parent = raw[old].parent < 0 ? -1 : new_id[raw[old].parent];
        if (tree.nodes[id].parent >= 0) {
            tree.nodes[tree.nodes[id].parent].children.push_back(id);
        }
        for (auto it = raw[old].children.rbegin(); it != raw[old].children.rend(); ++it) {
            stack.push_back(*it);
        }
    }
    tree.nodes[0].branch_length = 0.0;  // a length on the root carries no meaning

    std::unordered_map<std::string_view, int> seen;
    for (int i = 0; i < tree.num_nodes(); ++i) {
        if (tree.nodes[i].label.empty()) {
            continue;
        }
        if (!seen.emplace(tree.nodes[i].label, i).second) {
            throw TreeParseError("duplicate label '" + tree.nodes[i].label + "'", 0);
        }
    }
    tree.validate();
    return tree;
}

namespace {

void append_label(std::string& out, const std::string& label) {
    bool needs_quote = false;
    for (char c : label) {
        if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' || c == ']' ||
            c == '\'' || c == '"' || std::isspace(static_cast<unsigned char>(c))) {
            needs_quote = true;
            break;
        }
    }
    if (!needs_quote) {
        out += label;
        return;
    }
    out += '\'';
    for (char c : label) {
        if (c == '\'') {
            out += "''";
        } else {
            out += c;
        }
    }
    out += '\'';
}

void append_number(std::string& out, double value) {
    std::array<char, 32> buf;
    const int len = std::snprintf(buf.data(), buf.size(), "%.17g", value);
    out.append(buf.data(), static_cast<std::size_t>(len));
}

}  // namespace

std::string serialize_newick(const Tree& tree) {
    std::string out;
    out.reserve(tree.nodes.size() * 16);
    // Explicit stack: entry.child is the next child to emit, -1 = not opened.
    struct Frame {
        int node;
        std::size_t child = 0;
        bool opened = false;
    };
    std::vector<Frame> stack{{Tree::root()}};
    while (!stack.empty()) {
        Frame& frame = stack.back();
        const TreeNode& node = tree.nodes[frame.node];
        if (!node.children.empty() && !frame.opened) {
            out += '(';
            frame.opened = true;
        }
        if (frame.child < node.children.size()) {
            if (frame.child > 0) {
                out += ',';
            }
            stack.push_back({node.children[frame.child++]});
            continue;
        }
        if (!node.children.empty()) {
            out += ')';
        }
        append_label(out, node.label);
        if (frame.node != Tree::root()) {
            out += ':';
            append_number(out, node.branch_length);
        }
        stack.pop_back();
    }
    out += ';';
    return out;
}

// ---------------------------------------------------------------------------
// Branch rescaling
// ---------------------------------------------------------------------------

Tree rescale(const Tree& tree) {
    Tree out = tree;
    if (tree.num_branches() == 0) {
        return out;
    }
    const std::vector<double> times = tree.node_times();

    // Event sweep: exact ties of node times merge into one event.
    std::vector<double> events = times;
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());

    const auto event_index = [&](double t) {
        return static_cast<std::size_t>(
            std::lower_bound(events.begin(), events.end(), t) - events.begin());
    };

    // Lineage count per inter-event interval via +1/-1 difference counting.
    std::vector<int> delta(events.size() + 1, 0);
    for (int i = 1; i < tree.num_nodes(); ++i) {
        delta[event_index(times[tree.nodes[i].parent])] += 1;
        delta[event_index(times[i])] -= 1;
    }

    // integral[j] = accumulated 1/k(t) mass from time 0 to events[j].
    std::vector<double> integral(events.size(), 0.0);
    int alive = 0;
    for (std::size_t j = 0; j + 1 < events.size(); ++j) {
        alive += delta[j];
        const double width = events[j + 1] - events[j];
        integral[j + 1] = integral[j] + (alive > 0 ? width / alive : 0.0);
    }

    for (int i = 1; i < tree.num_nodes(); ++i) {
        out.nodes[i].branch_length =
            integral[event_index(times[i])] - integral[event_index(times[tree.nodes[i].parent])];
    }
    return out;
}

Tree normalize_branch_lengths(const Tree& tree) {
    Tree out = tree;
    const double total = tree.total_branch_length();
    if (tree.num_branches() == 0 || total <= 0.0) {
        return out;
    }
    const double scale = tree.num_branches() / total;
    for (int i = 1; i < out.num_nodes(); ++i) {
        out.nodes[i].branch_length *= scale;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

PrunedTree prune(const Tree& tree, const JumpVector& jumps) {
    if (static_cast<int>(jumps.size()) != tree.num_branches()) {
        throw std::invalid_argument("jump vector has " + std::to_string(jumps.size()) +
                                    " entries for " + std::to_string(tree.num_branches()) +
                                    " branches");
    }
    for (int b : jumps) {
        if (b < 0) {
            throw std::invalid_argument("negative jump count");
        }
    }

    PrunedTree pruned;
    pruned.node_group.resize(tree.num_nodes());
    for (int i = 0; i < tree.num_nodes(); ++i) {
        const int jump_count = i == 0 ? 1 : jumps[Tree::branch_of(i)];
        if (i > 0 && jump_count == 0) {
            pruned.node_group[i] = pruned.node_group[tree.nodes[i].parent];
        } else {
            const int group = pruned.num_groups();
            pruned.node_group[i] = group;
            pruned.group_parent.push_back(i == 0 ? -1
                                                 : pruned.node_group[tree.nodes[i].parent]);
            pruned.edge_jumps.push_back(i == 0 ? 0 : jump_count);
        }
    }

    pruned.group_children.resize(pruned.num_groups());
    pruned.group_members.resize(pruned.num_groups());
    pruned.group_observations.resize(pruned.num_groups());
    for (int g = 0; g < pruned.num_groups(); ++g) {
        if (pruned.group_parent[g] >= 0) {
            pruned.group_children[pruned.group_parent[g]].push_back(g);
        }
    }
    for (int i = 0; i < tree.num_nodes(); ++i) {
        const int g = pruned.node_group[i];
        pruned.group_members[g].push_back(i);
        for (std::size_t j = 0; j < tree.nodes[i].observations.size(); ++j) {
            pruned.group_observations[g].push_back(
                {i, static_cast<int>(j), tree.nodes[i].observations[j]});
        }
    }
    return pruned;
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

void attach_observations(Tree& tree,
                         std::span<const std::pair<std::string, int>> records) {
    if (tree.alphabet_size <= 0) {
        throw std::invalid_argument("alphabet size must be set before attaching observations");
    }
    std::unordered_map<std::string_view, int> by_label;
    for (int i = 0; i < tree.num_nodes(); ++i) {
        if (!tree.nodes[i].label.empty()) {
            by_label.emplace(tree.nodes[i].label, i);
        }
    }
    // Data-content problems are runtime errors (bad input file), unlike the
    // caller-side misuse above.
    for (const auto& [label, value] : records) {
        const auto it = by_label.find(label);
        if (it == by_label.end()) {
            throw std::runtime_error("unknown node label '" + label + "'");
        }
        if (value < 0 || value >= tree.alphabet_size) {
            throw std::runtime_error("value " + std::to_string(value) + " for label '" + label +
                                     "' outside alphabet of size " +
                                     std::to_string(tree.alphabet_size));
        }
        tree.nodes[it->second].observations.push_back(value);
    }
}

std::vector<std::pair<std::string, int>> parse_observation_tsv(std::string_view text) {
    std::vector<std::pair<std::string, int>> records;
    std::size_t line_start = 0;
    int line_number = 0;
    bool first_data_line = true;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) {
            line_end = text.size();
        }
        std::string_view line = text.substr(line_start, line_end - line_start);
        line_start = line_end + 1;
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            if (line_start > text.size()) {
                break;
            }
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) {
            // Malformed data files are runtime errors, matching the other
            // input-content failures.
            throw std::runtime_error("line " + std::to_string(line_number) +
                                     ": expected two tab-separated columns");
        }
        const std::string_view label = line.substr(0, tab);
        const std::string_view value_text = line.substr(tab + 1);
        int value = 0;
        const auto [ptr, ec] =
            std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        const bool numeric = ec == std::errc() && ptr == value_text.data() + value_text.size();
        if (!numeric) {
            if (first_data_line) {
                first_data_line = false;  // header line
                continue;
            }
            throw std::runtime_error("line " + std::to_string(line_number) + ": value '" +
                                     std::string(value_text) + "' is not an integer");
        }
        first_data_line = false;
        records.emplace_back(std::string(label), value);
        if (line_end == text.size()) {
            break;
        }
    }
    return records;
}

}  // namespace phyjump
