#include "phyjump/crf.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phyjump {

BaseMeasure BaseMeasure::uniform(int alphabet_size) {
    if (alphabet_size <= 0) {
        throw std::invalid_argument("alphabet size must be positive");
    }
    return BaseMeasure(std::vector<double>(static_cast<std::size_t>(alphabet_size),
                                           1.0 / alphabet_size));
}

BaseMeasure::BaseMeasure(std::vector<double> probabilities) : probs_(std::move(probabilities)) {
    if (probs_.empty()) {
        throw std::invalid_argument("base measure needs at least one category");
    }
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("base measure probabilities must be nonnegative");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("base measure probabilities sum to " +
                                    std::to_string(total) + ", not 1");
    }
}

namespace {

// Effective discount d^b collapses the b stacked PYP layers of the edge above
// a group into one; the root's single layer over H keeps exponent 1.
double effective_discount(const PrunedTree& pruned, double discount, int group) {
    const int exponent =
        group == PrunedTree::root_group() ? 1 : pruned.edge_jumps[static_cast<std::size_t>(group)];
    return std::pow(discount, static_cast<double>(exponent));
}

}  // namespace

CrfState::CrfState(const PrunedTree* pruned, double discount, BaseMeasure base)
    : pruned_(pruned), base_(std::move(base)), discount_(discount) {
    if (pruned_ == nullptr || pruned_->num_groups() == 0) {
        throw std::invalid_argument("pruned tree required");
    }
    if (!(discount_ > 0.0 && discount_ < 1.0)) {
        throw std::invalid_argument("discount must lie in (0,1)");
    }
    restaurants_.resize(static_cast<std::size_t>(pruned_->num_groups()));
    seated_.assign(static_cast<std::size_t>(pruned_->num_groups()), 0);
    for (int g = 0; g < pruned_->num_groups(); ++g) {
        restaurants_[static_cast<std::size_t>(g)].discount =
            effective_discount(*pruned_, discount_, g);
    }
}

double CrfState::predictive(int group, int value) const {
    if (group < 0 || group >= pruned_->num_groups()) {
        throw std::invalid_argument("unknown group " + std::to_string(group));
    }
    if (value < 0 || value >= base_.size()) {
        throw std::invalid_argument("value outside alphabet");
    }
    // Collect the root-ward chain, then fold the mixture top-down.
    std::vector<int> path;
    for (int g = group; g >= 0; g = pruned_->group_parent[static_cast<std::size_t>(g)]) {
        path.push_back(g);
    }
    double up = base_.prob(value);
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        const Restaurant& r = restaurants_[static_cast<std::size_t>(*it)];
        if (r.customers == 0) {
            continue;  // empty restaurant delegates to its parent
        }
        double matching = 0.0;
        for (const Cluster& c : r.clusters) {
            if (c.label == value) {
                matching += c.count - r.discount;
            }
        }
        up = (matching + r.num_clusters() * r.discount * up) / r.customers;
    }
    return up;
}

ClusterConfiguration CrfState::seat(int group, int value, SplitMix64& rng) {
    if (!(predictive(group, value) > 0.0)) {
        throw std::runtime_error("value " + std::to_string(value) +
                                 " has zero predictive mass at group " + std::to_string(group));
    }
    ClusterConfiguration path;
    int g = group;
    for (;;) {
        Restaurant& r = restaurants_[static_cast<std::size_t>(g)];
        const int parent = pruned_->group_parent[static_cast<std::size_t>(g)];
        if (r.customers > 0) {
            // Label-matching cluster k: weight count_k - d_eff; new cluster:
            // K * d_eff * p_parent(value). An empty restaurant must open.
            const double parent_prob =
                parent < 0 ? base_.prob(value) : predictive(parent, value);
            std::vector<int> join;
            std::vector<double> weights;
            for (int k = 0; k < r.num_clusters(); ++k) {
                const Cluster& c = r.clusters[static_cast<std::size_t>(k)];
                if (c.label == value) {
                    join.push_back(k);
                    weights.push_back(c.count - r.discount);
                }
            }
            weights.push_back(r.num_clusters() * r.discount * parent_prob);
            const std::size_t pick = sample_discrete(rng, weights);
            if (pick < join.size()) {
                const int k = join[pick];
                r.clusters[static_cast<std::size_t>(k)].count += 1;
                r.customers += 1;
                path.push_back({g, k, false});
                break;
            }
        }
        r.clusters.push_back({value, 1});
        r.customers += 1;
        path.push_back({g, r.num_clusters() - 1, true});
        if (parent < 0) {
            break;  // root-level new cluster draws its dish from H
        }
        g = parent;
    }
    seated_[static_cast<std::size_t>(group)] += 1;
    return path;
}

std::vector<std::pair<ClusterConfiguration, double>> CrfState::seat_options(int group,
                                                                            int value) const {
    std::vector<std::pair<ClusterConfiguration, double>> options;
    ClusterConfiguration prefix;
    double mass = 1.0;  // probability of having opened a cluster at each level so far
    int g = group;
    for (;;) {
        const Restaurant& r = restaurants_[static_cast<std::size_t>(g)];
        const int parent = pruned_->group_parent[static_cast<std::size_t>(g)];
        if (r.customers > 0) {
            for (int k = 0; k < r.num_clusters(); ++k) {
                const Cluster& c = r.clusters[static_cast<std::size_t>(k)];
                if (c.label != value) {
                    continue;
                }
                ClusterConfiguration path = prefix;
                path.push_back({g, k, false});
                options.emplace_back(std::move(path),
                                     mass * (c.count - r.discount) / r.customers);
            }
            mass *= r.num_clusters() * r.discount / r.customers;
        }
        prefix.push_back({g, r.num_clusters(), true});
        if (parent < 0) {
            options.emplace_back(std::move(prefix), mass * base_.prob(value));
            return options;
        }
        g = parent;
    }
}

void CrfState::apply(const ClusterConfiguration& path, int value) {
    for (const SeatStep& step : path) {
        Restaurant& r = restaurants_[static_cast<std::size_t>(step.group)];
        if (step.created) {
            if (step.cluster != r.num_clusters()) {
                throw std::logic_error("stale seating path: cluster index mismatch");
            }
            r.clusters.push_back({value, 1});
        } else {
            r.clusters[static_cast<std::size_t>(step.cluster)].count += 1;
        }
        r.customers += 1;
    }
    if (!path.empty()) {
        seated_[static_cast<std::size_t>(path.front().group)] += 1;
    }
}

void CrfState::unseat(const ClusterConfiguration& path) {
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        Restaurant& r = restaurants_[static_cast<std::size_t>(it->group)];
        if (it->created) {
            if (it->cluster != r.num_clusters() - 1 ||
                r.clusters.back().count != 1) {
                throw std::logic_error("unseat must undo the most recent seating");
            }
            r.clusters.pop_back();
        } else {
            r.clusters[static_cast<std::size_t>(it->cluster)].count -= 1;
        }
        r.customers -= 1;
    }
    if (!path.empty()) {
        seated_[static_cast<std::size_t>(path.front().group)] -= 1;
    }
}

void CrfState::check_consistency() const {
    for (int g = 0; g < pruned_->num_groups(); ++g) {
        const Restaurant& r = restaurants_[static_cast<std::size_t>(g)];
        int total = 0;
        for (const Cluster& c : r.clusters) {
            if (c.count < 1) {
                throw std::logic_error("cluster with nonpositive count");
            }
            total += c.count;
        }
        if (total != r.customers) {
            throw std::logic_error("customer total mismatch in group " + std::to_string(g));
        }
        // Every customer is a directly seated observation or one child cluster.
        int child_clusters = 0;
        for (int child : pruned_->group_children[static_cast<std::size_t>(g)]) {
            child_clusters += restaurants_[static_cast<std::size_t>(child)].num_clusters();
        }
        if (r.customers != seated_[static_cast<std::size_t>(g)] + child_clusters) {
            throw std::logic_error("hierarchical consistency violated at group " +
                                   std::to_string(g));
        }
    }
}

std::vector<std::vector<int>> crf_generate(const PrunedTree& pruned, double discount,
                                           const BaseMeasure& base, std::span<const int> counts,
                                           SplitMix64& rng) {
    if (static_cast<int>(counts.size()) != pruned.num_groups()) {
        throw std::invalid_argument("one count per group required");
    }
    if (!(discount > 0.0 && discount < 1.0)) {
        throw std::invalid_argument("discount must lie in (0,1)");
    }
    std::vector<Restaurant> restaurants(static_cast<std::size_t>(pruned.num_groups()));
    for (int g = 0; g < pruned.num_groups(); ++g) {
        restaurants[static_cast<std::size_t>(g)].discount =
            effective_discount(pruned, discount, g);
    }
    std::vector<double> h(static_cast<std::size_t>(base.size()));
    for (int v = 0; v < base.size(); ++v) {
        h[static_cast<std::size_t>(v)] = base.prob(v);
    }

    // Unconditional seating: the drawn customer joins cluster k w.p.
    // (count_k - d_eff)/n, else opens a cluster whose dish comes from the
    // parent's own draw (the base measure at the root).
    const auto draw = [&](const auto& self, int group) -> int {
        Restaurant& r = restaurants[static_cast<std::size_t>(group)];
        if (r.customers > 0) {
            std::vector<double> weights;
            weights.reserve(static_cast<std::size_t>(r.num_clusters()) + 1);
            for (const Cluster& c : r.clusters) {
                weights.push_back(c.count - r.discount);
            }
            weights.push_back(r.num_clusters() * r.discount);
            const std::size_t pick = sample_discrete(rng, weights);
            if (pick < static_cast<std::size_t>(r.num_clusters())) {
                r.clusters[pick].count += 1;
                r.customers += 1;
                return r.clusters[pick].label;
            }
        }
        const int parent = pruned.group_parent[static_cast<std::size_t>(group)];
        const int value =
            parent < 0 ? static_cast<int>(sample_discrete(rng, h)) : self(self, parent);
        r.clusters.push_back({value, 1});
        r.customers += 1;
        return value;
    };

    std::vector<std::vector<int>> values(static_cast<std::size_t>(pruned.num_groups()));
    for (int g = 0; g < pruned.num_groups(); ++g) {
        for (int i = 0; i < counts[static_cast<std::size_t>(g)]; ++i) {
            values[static_cast<std::size_t>(g)].push_back(draw(draw, g));
        }
    }
    return values;
}

}  // namespace phyjump
