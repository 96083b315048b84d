#pragma once

#include <span>
#include <utility>
#include <vector>

#include "phyjump/rng.hpp"
#include "phyjump/tree.hpp"

namespace phyjump {

/// Base distribution H over the alphabet {0,...,V-1}.
class BaseMeasure {
public:
    static BaseMeasure uniform(int alphabet_size);
    explicit BaseMeasure(std::vector<double> probabilities);  // must sum to 1 (1e-12)

    double prob(int value) const { return probs_[static_cast<std::size_t>(value)]; }
    int size() const { return static_cast<int>(probs_.size()); }

    friend bool operator==(const BaseMeasure&, const BaseMeasure&) = default;

private:
    std::vector<double> probs_;
};

struct Cluster {
    int label;  // shared by every customer of the cluster
    int count;  // >= 1

    friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// Seating state of one group's restaurant. `discount` is the effective
/// discount for the pruned edge above the group: d^jumps, and d at the root.
struct Restaurant {
    std::vector<Cluster> clusters;  // insertion order; indices are stable
    int customers = 0;
    double discount = 0.5;

    int num_clusters() const { return static_cast<int>(clusters.size()); }

    friend bool operator==(const Restaurant&, const Restaurant&) = default;
};

struct SeatStep {
    int group;
    int cluster;   // index within the group's restaurant
    bool created;  // true when this step opened the cluster

    friend bool operator==(const SeatStep&, const SeatStep&) = default;
};

/// Seating path of one observation, listed from its own group upward.
/// Ends at the first existing cluster joined, or at a new root-group
/// cluster backed by the base measure.
using ClusterConfiguration = std::vector<SeatStep>;

/// Chinese-restaurant-franchise state: one restaurant per pruned-tree group.
/// Invariant: a non-root group's cluster count equals the number of customers
/// it contributes to its parent's restaurant.
class CrfState {
public:
    CrfState(const PrunedTree* pruned, double discount, BaseMeasure base);

    /// Predictive probability of `value` for the next customer at `group`.
    /// Empty restaurants delegate to the parent (base measure at the root).
    double predictive(int group, int value) const;

    /// Samples a seating path from the exact conditional given `value` and
    /// applies it. Throws when the value has zero predictive mass.
    ClusterConfiguration seat(int group, int value, SplitMix64& rng);

    /// All distinct seating paths for (group, value), each with its joint
    /// probability; the probabilities sum to predictive(group, value).
    std::vector<std::pair<ClusterConfiguration, double>> seat_options(int group,
                                                                      int value) const;

    /// Replays a path produced by seat/seat_options for an observation of
    /// `value`. Cluster indices must match the current state.
    void apply(const ClusterConfiguration& path, int value);

    /// Exact inverse of the most recent apply/seat of `path`.
    void unseat(const ClusterConfiguration& path);

    const Restaurant& restaurant(int group) const {
        return restaurants_[static_cast<std::size_t>(group)];
    }
    const PrunedTree& pruned() const { return *pruned_; }
    const BaseMeasure& base() const { return base_; }
    double discount() const { return discount_; }

    /// Throws std::logic_error if the hierarchical invariant is violated.
    void check_consistency() const;

    friend bool operator==(const CrfState& a, const CrfState& b) {
        return a.restaurants_ == b.restaurants_ && a.seated_ == b.seated_;
    }

private:
    const PrunedTree* pruned_;
    BaseMeasure base_;
    double discount_;
    std::vector<Restaurant> restaurants_;
    std::vector<int> seated_;  // observations seated directly at each group
};

/// Draws counts[g] observations per group by sequentially seating customers
/// (groups in ascending id order). New root-level clusters draw labels from
/// the base measure. Returns the values per group, in seating order.
std::vector<std::vector<int>> crf_generate(const PrunedTree& pruned, double discount,
                                           const BaseMeasure& base, std::span<const int> counts,
                                           SplitMix64& rng);

}  // namespace phyjump
