#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace phyjump {

struct TreeNode {
    std::string label;              // may be empty; unique when present
    int parent = -1;                // -1 for the root
    std::vector<int> children;
    double branch_length = 0.0;     // edge above this node; meaningless for the root
    std::vector<int> observations;  // categorical values in [0, alphabet_size)
};

/// Rooted tree with branch lengths and per-node categorical observations.
///
/// Node ids are preorder: the root is node 0 and every child id exceeds its
/// parent id. Branch k is the edge above node k+1, so a tree with N nodes
/// has B = N-1 branches addressed 0..B-1.
struct Tree {
    std::vector<TreeNode> nodes;
    int alphabet_size = 0;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_branches() const { return num_nodes() - 1; }
    static constexpr int root() { return 0; }

    static constexpr int branch_child(int branch) { return branch + 1; }
    static constexpr int branch_of(int node) { return node - 1; }

    double branch_length(int branch) const { return nodes[branch + 1].branch_length; }
    double total_branch_length() const;

    bool is_leaf(int node) const { return nodes[node].children.empty(); }
    int num_leaves() const;
    int num_observations() const;

    /// Leaf count of the subtree rooted at `node` (the node itself if a leaf).
    int subtree_leaves(int node) const;

    /// Distance from the root to each node.
    std::vector<double> node_times() const;
    double height() const;

    std::optional<int> find_label(std::string_view label) const;

    /// Throws std::invalid_argument when a structural invariant is broken.
    void validate() const;
};

/// Per-branch nonnegative jump counts, indexed like Tree branches.
using JumpVector = std::vector<int>;

/// Contraction of a tree by its zero-jump branches. Nodes connected by
/// jump-free paths form one group; each surviving edge carries the jump
/// count of the original branch it came from. Group ids follow first
/// occurrence in node-id order, so the root group is always 0 and every
/// group's parent has a smaller id.
struct PrunedObservation {
    int node = 0;       // original node id
    int index = 0;      // position within that node's observation list
    int value = 0;
};

struct PrunedTree {
    std::vector<int> node_group;                 // original node id -> group id
    std::vector<int> group_parent;               // -1 for the root group
    std::vector<std::vector<int>> group_children;
    std::vector<int> edge_jumps;                 // per group: jumps on the edge to its parent
    std::vector<std::vector<int>> group_members; // node ids, ascending
    std::vector<std::vector<PrunedObservation>> group_observations;

    int num_groups() const { return static_cast<int>(group_parent.size()); }
    static constexpr int root_group() { return 0; }
};

/// Parse a single Newick statement. Branch lengths default to 1.0 when
/// absent; quoted labels and bracket comments are handled; duplicate labels
/// are rejected. Throws TreeParseError with a byte offset on syntax errors.
Tree parse_newick(std::string_view text);

std::string serialize_newick(const Tree& tree);

/// Replace every branch length by the integral of 1/k(t) over the branch's
/// time span, where k(t) is the number of branches alive at time t anywhere
/// in the tree. A homogeneous unit-rate point process on the result places
/// constant jump probability per unit time of the original tree.
Tree rescale(const Tree& tree);

/// Scale branch lengths so they average one (total length becomes the
/// branch count). Used for compatibility with rate updates stated in terms
/// of branch counts rather than total length.
Tree normalize_branch_lengths(const Tree& tree);

PrunedTree prune(const Tree& tree, const JumpVector& jumps);

/// Append observations given as (node label, value) records. Requires
/// tree.alphabet_size to be set; every label must exist in the tree.
void attach_observations(Tree& tree, std::span<const std::pair<std::string, int>> records);

/// Parse tab-separated "label<TAB>value" text. A first line whose second
/// column is non-numeric is treated as a header and skipped.
std::vector<std::pair<std::string, int>> parse_observation_tsv(std::string_view text);

class TreeParseError : public std::exception {
public:
    TreeParseError(std::string message, std::size_t position);
    const char* what() const noexcept override { return message_.c_str(); }
    std::size_t position() const { return position_; }

private:
    std::string message_;
    std::size_t position_;
};

}  // namespace phyjump
