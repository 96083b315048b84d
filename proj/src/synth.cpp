#include "phyjump/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace phyjump {

namespace {

/// Remy's growth: repeatedly graft a new leaf onto a uniformly chosen node,
/// on a uniformly chosen side; the topology is uniform over binary trees.
Tree remy_topology(int n_leaves, SplitMix64& rng) {
    struct RawNode {
        int parent = -1;
        int left = -1;
        int right = -1;
    };
    std::vector<RawNode> raw(1);
    int root = 0;
    for (int k = 2; k <= n_leaves; ++k) {
        const std::uint64_t pick = uniform_below(rng, raw.size() * 2);
        const int target = static_cast<int>(pick >> 1);
        const bool new_leaf_left = (pick & 1) != 0;
        const int joint = static_cast<int>(raw.size());
        raw.push_back({raw[static_cast<std::size_t>(target)].parent, -1, -1});
        const int leaf = static_cast<int>(raw.size());
        raw.push_back({joint, -1, -1});
        RawNode& j = raw[static_cast<std::size_t>(joint)];
        if (new_leaf_left) {
            j.left = leaf;
            j.right = target;
        } else {
            j.left = target;
            j.right = leaf;
        }
        if (j.parent < 0) {
            root = joint;
        } else {
            RawNode& p = raw[static_cast<std::size_t>(j.parent)];
            (p.left == target ? p.left : p.right) = joint;
        }
        raw[static_cast<std::size_t>(target)].parent = joint;
    }

    Tree tree;
    tree.nodes.resize(raw.size());
    std::vector<std::pair<int, int>> stack{{root, -1}};  // (raw id, new parent id)
    int next = 0;
    while (!stack.empty()) {
        const auto [old, parent] = stack.back();
        stack.pop_back();
        const int id = next++;
        tree.nodes[static_cast<std::size_t>(id)].parent = parent;
        if (parent >= 0) {
            tree.nodes[static_cast<std::size_t>(parent)].children.push_back(id);
        }
        const RawNode& node = raw[static_cast<std::size_t>(old)];
        if (node.right >= 0) {
            stack.emplace_back(node.right, id);
        }
        if (node.left >= 0) {
            stack.emplace_back(node.left, id);
        }
    }
    return tree;
}

/// Recursive uniform splits of each node's leaf budget, built in preorder.
Tree uniform_split_topology(int n_leaves, SplitMix64& rng) {
    Tree tree;
    struct Item {
        int parent;
        int budget;
    };
    std::vector<Item> stack{{-1, n_leaves}};
    while (!stack.empty()) {
        const auto [parent, budget] = stack.back();
        stack.pop_back();
        const int id = tree.num_nodes();
        tree.nodes.emplace_back();
        tree.nodes.back().parent = parent;
        if (parent >= 0) {
            tree.nodes[static_cast<std::size_t>(parent)].children.push_back(id);
        }
        if (budget > 1) {
            const int left =
                1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(budget - 1)));
            stack.push_back({id, budget - left});  // right subtree, popped second
            stack.push_back({id, left});
        }
    }
    return tree;
}

}  // namespace

Tree random_binary_tree(int n_leaves, SplitMix64& rng, BranchLengthLaw law,
                        TopologyLaw topology) {
    if (n_leaves < 2) {
        throw std::invalid_argument("need at least 2 leaves");
    }
    Tree tree = topology == TopologyLaw::uniform_split ? uniform_split_topology(n_leaves, rng)
                                                       : remy_topology(n_leaves, rng);
    tree.alphabet_size = 2;

    int leaf_counter = 0;
    for (int i = 0; i < tree.num_nodes(); ++i) {
        if (i > 0) {
            tree.nodes[static_cast<std::size_t>(i)].branch_length =
                law == BranchLengthLaw::uniform_unit ? uniform_pos(rng)
                                                     : sample_exponential(rng, 1.0);
        }
        if (tree.nodes[static_cast<std::size_t>(i)].children.empty()) {
            tree.nodes[static_cast<std::size_t>(i)].label = "L" + std::to_string(++leaf_counter);
        }
    }
    tree.validate();
    return tree;
}

namespace {

std::vector<int> subtree_leaf_counts(const Tree& tree) {
    std::vector<int> counts(static_cast<std::size_t>(tree.num_nodes()), 0);
    for (int i = tree.num_nodes() - 1; i >= 0; --i) {
        if (tree.nodes[static_cast<std::size_t>(i)].children.empty()) {
            counts[static_cast<std::size_t>(i)] = 1;
        }
        if (i > 0) {
            counts[static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(i)].parent)] +=
                counts[static_cast<std::size_t>(i)];
        }
    }
    return counts;
}

bool branch_within(const Tree& tree, int branch, int ancestor_branch) {
    int node = Tree::branch_child(branch);
    const int top = Tree::branch_child(ancestor_branch);
    while (node > 0) {
        node = tree.nodes[static_cast<std::size_t>(node)].parent;
        if (node == top) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<int> place_jumps(const Tree& tree, double lo, double hi, int count, bool nested,
                             SplitMix64& rng) {
    if (count < 1) {
        throw std::invalid_argument("need at least one jump branch");
    }
    if (!(lo > 0.0 && lo < hi && hi <= 1.0)) {
        throw std::invalid_argument("window must satisfy 0 < lo < hi <= 1");
    }
    const std::vector<int> counts = subtree_leaf_counts(tree);
    const double total_leaves = counts[0];
    const auto fraction = [&](int branch) {
        return counts[static_cast<std::size_t>(Tree::branch_child(branch))] / total_leaves;
    };

    if (nested) {
        // Chain with leaf fractions closest to (count-i)/(count+1); each pick
        // is restricted to strict descendants of the previous one.
        std::vector<int> chosen;
        for (int i = 0; i < count; ++i) {
            const double target = static_cast<double>(count - i) / (count + 1);
            int best = -1;
            double best_gap = std::numeric_limits<double>::infinity();
            for (int b = 0; b < tree.num_branches(); ++b) {
                if (!chosen.empty() && !branch_within(tree, b, chosen.back())) {
                    continue;
                }
                const double gap = std::abs(fraction(b) - target);
                if (gap < best_gap) {
                    best_gap = gap;
                    best = b;
                }
            }
            if (best < 0) {
                throw std::invalid_argument("no eligible branch to nest below branch " +
                                            std::to_string(chosen.back()));
            }
            chosen.push_back(best);
        }
        return chosen;
    }

    std::vector<int> eligible;
    for (int b = 0; b < tree.num_branches(); ++b) {
        const double f = fraction(b);
        if (f >= lo && f <= hi) {
            eligible.push_back(b);
        }
    }
    if (static_cast<int>(eligible.size()) < count) {
        throw std::invalid_argument("only " + std::to_string(eligible.size()) +
                                    " branches have a subtree leaf fraction in [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
    for (int i = 0; i < count; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) + uniform_below(rng, eligible.size() - i);
        std::swap(eligible[static_cast<std::size_t>(i)], eligible[j]);
    }
    eligible.resize(static_cast<std::size_t>(count));
    std::sort(eligible.begin(), eligible.end());
    return eligible;
}

SyntheticDataset simulate_dataset(const Tree& tree, const std::vector<int>& jump_branches,
                                  double p, Scheme scheme, SplitMix64& rng) {
    JumpVector indicator(static_cast<std::size_t>(tree.num_branches()), 0);
    for (int b : jump_branches) {
        if (b < 0 || b >= tree.num_branches()) {
            throw std::invalid_argument("jump branch out of range");
        }
        indicator[static_cast<std::size_t>(b)] = 1;
    }
    const PrunedTree pruned = prune(tree, indicator);

    SyntheticDataset out;
    out.node_group = pruned.node_group;
    out.group_probs.resize(static_cast<std::size_t>(pruned.num_groups()));
    if (scheme == Scheme::two_group) {
        if (jump_branches.size() != 1 || pruned.num_groups() != 2) {
            throw std::invalid_argument("two-group scheme needs exactly one jump branch");
        }
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("two-group total variation must lie in [0,1]");
        }
        out.group_probs[0] = 0.5 - p / 2.0;  // root-side group
        out.group_probs[1] = 0.5 + p / 2.0;
    } else {
        if (jump_branches.size() != 3 || pruned.num_groups() != 4) {
            throw std::invalid_argument("nested scheme needs three nested jump branches");
        }
        if (!(p >= 0.0 && p <= 1.0 / 3.0)) {
            throw std::invalid_argument("nested total variation must lie in [0, 1/3]");
        }
        for (int g = 0; g < 4; ++g) {
            int depth = 0;
            for (int a = pruned.group_parent[static_cast<std::size_t>(g)]; a >= 0;
                 a = pruned.group_parent[static_cast<std::size_t>(a)]) {
                ++depth;
            }
            out.group_probs[static_cast<std::size_t>(g)] = 0.5 + (depth - 1.5) * p;
        }
    }

    for (int i = 0; i < tree.num_nodes(); ++i) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
        if (!node.children.empty()) {
            continue;
        }
        if (node.label.empty()) {
            throw std::invalid_argument("leaf node " + std::to_string(i) + " has no label");
        }
        const double prob = out.group_probs[static_cast<std::size_t>(
            pruned.node_group[static_cast<std::size_t>(i)])];
        out.records.emplace_back(node.label, uniform01(rng) < prob ? 1 : 0);
    }

    // Empirical success rate per group, over leaves only.
    std::vector<double> ones(static_cast<std::size_t>(pruned.num_groups()), 0.0);
    std::vector<int> leaves(static_cast<std::size_t>(pruned.num_groups()), 0);
    std::size_t record = 0;
    for (int i = 0; i < tree.num_nodes(); ++i) {
        if (!tree.nodes[static_cast<std::size_t>(i)].children.empty()) {
            continue;
        }
        const std::size_t g =
            static_cast<std::size_t>(pruned.node_group[static_cast<std::size_t>(i)]);
        ones[g] += out.records[record++].second;
        leaves[g] += 1;
    }
    for (int b : jump_branches) {
        const int child = Tree::branch_child(b);
        const std::size_t below =
            static_cast<std::size_t>(pruned.node_group[static_cast<std::size_t>(child)]);
        const std::size_t above = static_cast<std::size_t>(pruned.node_group[
            static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(child)].parent)]);
        if (leaves[below] == 0 || leaves[above] == 0) {
            throw std::invalid_argument("a group separated by branch " + std::to_string(b) +
                                        " has no leaves");
        }
        out.emp_tv.push_back(
            std::abs(ones[below] / leaves[below] - ones[above] / leaves[above]));
    }
    return out;
}

RocResult roc_auc(std::span<const double> scores, std::span<const char> truth) {
    if (scores.size() != truth.size()) {
        throw std::invalid_argument("scores and truth lengths differ");
    }
    int positives = 0;
    for (char t : truth) {
        positives += t ? 1 : 0;
    }
    const int negatives = static_cast<int>(truth.size()) - positives;
    if (positives == 0 || negatives == 0) {
        throw std::invalid_argument("need at least one positive and one negative branch");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });

    RocResult out;
    out.points.emplace_back(0.0, 0.0);
    out.auc = 0.0;
    int tp = 0;
    int fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        // Tied scores advance as one block: the segment is a diagonal, which
        // is exactly the tie-averaged ranking convention.
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += truth[order[j]] ? 1 : 0;
            fp += truth[order[j]] ? 0 : 1;
            ++j;
        }
        const auto [prev_fpr, prev_tpr] = out.points.back();
        const double fpr = static_cast<double>(fp) / negatives;
        const double tpr = static_cast<double>(tp) / positives;
        out.auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        out.points.emplace_back(fpr, tpr);
        i = j;
    }
    return out;
}

bool target_identified(const JumpVector& jumps, std::span<const int> true_branches) {
    std::vector<int> found;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        if (jumps[i] >= 1) {
            found.push_back(static_cast<int>(i));
        }
    }
    std::vector<int> expected(true_branches.begin(), true_branches.end());
    std::sort(expected.begin(), expected.end());
    return found == expected;
}

}  // namespace phyjump
