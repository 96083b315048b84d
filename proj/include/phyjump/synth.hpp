#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phyjump/rng.hpp"
#include "phyjump/tree.hpp"

namespace phyjump {

enum class BranchLengthLaw { exponential_unit, uniform_unit };

/// remy_uniform draws the topology uniformly over binary trees; uniform_split
/// recursively splits each node's leaf budget uniformly (the law behind the
/// usual R-style `rtree` generators), which yields much more balanced trees.
enum class TopologyLaw { remy_uniform, uniform_split };

/// Random binary topology drawn from `topology` with i.i.d. branch lengths
/// drawn from `law` (exponential(1) by default); leaves are labeled L1..Ln
/// in preorder.
Tree random_binary_tree(int n_leaves, SplitMix64& rng,
                        BranchLengthLaw law = BranchLengthLaw::exponential_unit,
                        TopologyLaw topology = TopologyLaw::remy_uniform);

/// Picks `count` jump branches. Windowed mode: uniform without replacement
/// among branches whose subtree holds a leaf fraction in [lo, hi]. Nested
/// mode: a strictly nested chain with fractions closest to
/// (count-i)/(count+1), i.e. (3/4, 1/2, 1/4) for count = 3.
std::vector<int> place_jumps(const Tree& tree, double lo, double hi, int count, bool nested,
                             SplitMix64& rng);

enum class Scheme { two_group, nested };

/// Group g takes success probability 0.5 +- p/2 (two-group, 1 jump) or
/// 0.5 + (2g-3)/2 * p for g = 0..3 (nested, 3 jumps); p is the total
/// variation between adjacent groups.
struct SyntheticDataset {
    std::vector<std::pair<std::string, int>> records;  // leaf label -> value
    std::vector<int> node_group;       // ground truth, == prune(tree, 1[jump]) groups
    std::vector<double> group_probs;   // success probability per group
    std::vector<double> emp_tv;        // per jump branch: empirical TV across it
};

SyntheticDataset simulate_dataset(const Tree& tree, const std::vector<int>& jump_branches,
                                  double p, Scheme scheme, SplitMix64& rng);

struct RocResult {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) to (1,1)
    double auc;                                     // trapezoidal, ties averaged
};

RocResult roc_auc(std::span<const double> scores, std::span<const char> truth);

/// True when the jump-positive branch set of `jumps` equals `true_branches`.
bool target_identified(const JumpVector& jumps, std::span<const int> true_branches);

}  // namespace phyjump
