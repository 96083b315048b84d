#include "phyjump/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace phyjump {

ClusterAssignment assignment_from_jumps(const Tree& tree, const JumpVector& jumps) {
    if (static_cast<int>(jumps.size()) != tree.num_branches()) {
        throw std::invalid_argument("jump vector length mismatch");
    }
    ClusterAssignment out;
    out.z.resize(static_cast<std::size_t>(tree.num_nodes()));
    int next = 1;
    for (int i = 1; i < tree.num_nodes(); ++i) {
        // Ascending preorder ids make this first-occurrence canonical.
        out.z[static_cast<std::size_t>(i)] =
            jumps[static_cast<std::size_t>(Tree::branch_of(i))] == 0
                ? out.z[static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(i)].parent)]
                : next++;
    }
    return out;
}

namespace {

std::span<const ChainRecord> checked_post_burn_in(const Chain& chain) {
    const auto post = chain.post_burn_in();
    if (post.empty()) {
        throw std::invalid_argument("no post-burn-in samples");
    }
    return post;
}

struct VectorHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::size_t h = 1469598103934665603ULL;
        for (int x : v) {
            h = (h ^ static_cast<std::size_t>(static_cast<unsigned>(x))) * 1099511628211ULL;
        }
        return h;
    }
};

// Samples collapse to few distinct partitions, so pair-counting per unique
// assignment keeps the N^2 work off the per-record path.
std::unordered_map<std::vector<int>, int, VectorHash> tally_assignments(
    const Tree& tree, std::span<const ChainRecord> records) {
    std::unordered_map<std::vector<int>, int, VectorHash> counts;
    for (const ChainRecord& record : records) {
        counts[assignment_from_jumps(tree, record.jumps).z] += 1;
    }
    return counts;
}

std::vector<double> coclustering_of(const Tree& tree, std::span<const ChainRecord> records) {
    const std::size_t n = static_cast<std::size_t>(tree.num_nodes());
    std::vector<double> matrix(n * n, 0.0);
    for (const auto& [z, count] : tally_assignments(tree, records)) {
        const double weight = static_cast<double>(count) / static_cast<double>(records.size());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (z[i] == z[j]) {
                    matrix[i * n + j] += weight;
                }
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        matrix[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            matrix[j * n + i] = matrix[i * n + j];
        }
    }
    return matrix;
}

}  // namespace

std::vector<double> branch_probabilities(const Chain& chain) {
    const auto post = checked_post_burn_in(chain);
    const std::size_t branches = post.front().jumps.size();
    std::vector<double> probabilities(branches, 0.0);
    for (const ChainRecord& record : post) {
        for (std::size_t i = 0; i < branches; ++i) {
            if (record.jumps[i] >= 1) {
                probabilities[i] += 1.0;
            }
        }
    }
    for (double& p : probabilities) {
        p /= static_cast<double>(post.size());
    }
    return probabilities;
}

std::vector<double> coclustering(const Tree& tree, const Chain& chain) {
    return coclustering_of(tree, checked_post_burn_in(chain));
}

BinderResult binder_median(const Tree& tree, const Chain& chain) {
    const auto post = checked_post_burn_in(chain);
    if (post.size() < 2) {
        throw std::invalid_argument("need at least 2 post-burn-in samples");
    }
    const std::size_t split = post.size() / 2;
    const std::vector<double> cocluster = coclustering_of(tree, post.subspan(0, split));
    const std::size_t n = static_cast<std::size_t>(tree.num_nodes());

    // l(Z) = sum_{i<j} 1[z_i = z_j] (P(z_i = z_j | X) - 1/2), maximized over
    // the second half; earliest iteration wins ties.
    std::unordered_map<std::vector<int>, double, VectorHash> scores;
    BinderResult best;
    best.score = -std::numeric_limits<double>::infinity();
    best.iteration = -1;
    for (std::size_t r = split; r < post.size(); ++r) {
        ClusterAssignment assignment = assignment_from_jumps(tree, post[r].jumps);
        auto [it, fresh] = scores.try_emplace(assignment.z, 0.0);
        if (fresh) {
            double score = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (assignment.z[i] == assignment.z[j]) {
                        score += cocluster[i * n + j] - 0.5;
                    }
                }
            }
            it->second = score;
        }
        if (it->second > best.score) {
            best.score = it->second;
            best.assignment = std::move(assignment);
            best.jumps = post[r].jumps;
            best.iteration = chain.burn_in() + static_cast<int>(r);
        }
    }
    return best;
}

double bayes_factor(const Chain& chain, const RateConfig& rate, double total_rescaled_length) {
    const auto post = checked_post_burn_in(chain);
    std::size_t jumped = 0;
    for (const ChainRecord& record : post) {
        for (int b : record.jumps) {
            if (b >= 1) {
                jumped += 1;
                break;
            }
        }
    }
    const std::size_t still = post.size() - jumped;
    if (still == 0) {
        return std::numeric_limits<double>::infinity();
    }
    if (jumped == 0) {
        return 0.0;
    }
    // P(M0) in closed form: Poisson void probability at fixed lambda, or the
    // Gamma(1, rho) mixture of it when the rate is learned.
    const double p0 = rate.mode == RateConfig::Mode::fixed
                          ? std::exp(-rate.lambda * total_rescaled_length)
                          : rate.rho / (rate.rho + total_rescaled_length);
    return (static_cast<double>(jumped) / static_cast<double>(still)) * p0 / (1.0 - p0);
}

double ess(std::span<const double> values) {
    const std::size_t m = values.size();
    if (m < 10) {
        throw std::invalid_argument("need at least 10 values for an ESS estimate");
    }
    // Detect constants exactly: accumulation rounding otherwise leaves a tiny
    // spurious variance and a nonsense ESS near 1 (fixed-rate lambda traces).
    if (std::all_of(values.begin(), values.end(),
                    [&](double v) { return v == values.front(); })) {
        std::cerr << "warning: constant sequence, reporting ESS = length\n";
        return static_cast<double>(m);
    }
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(m);

    const auto autocovariance = [&](std::size_t lag) {
        double sum = 0.0;
        for (std::size_t t = 0; t + lag < m; ++t) {
            sum += (values[t] - mean) * (values[t + lag] - mean);
        }
        return sum / static_cast<double>(m);
    };
    const double variance = autocovariance(0);
    if (!(variance > 0.0)) {
        return static_cast<double>(m);  // numerically flat; same as constant
    }

    // Geyer: sum pair autocorrelations Gamma_k = rho_{2k} + rho_{2k+1} while
    // they stay positive; tau = 2 * sum - 1.
    double pair_sum = 0.0;
    for (std::size_t k = 0; 2 * k + 1 < m; ++k) {
        const double pair =
            (autocovariance(2 * k) + autocovariance(2 * k + 1)) / variance;
        if (pair <= 0.0) {
            break;
        }
        pair_sum += pair;
    }
    const double tau = 2.0 * pair_sum - 1.0;
    if (!(tau > 0.0)) {
        return static_cast<double>(m);  // negative-correlation edge; clamp
    }
    return std::min(static_cast<double>(m) / tau, static_cast<double>(m));
}

Summary summarize(const Tree& tree, const Chain& chain) {
    Summary summary;
    summary.branch_probabilities = branch_probabilities(chain);
    summary.coclustering = coclustering(tree, chain);
    summary.median = binder_median(tree, chain);
    summary.bayes_factor = bayes_factor(chain, chain.rate, chain.total_rescaled_length);
    summary.log10_bayes_factor = std::log10(summary.bayes_factor);

    const auto post = chain.post_burn_in();
    std::vector<double> lambdas;
    lambdas.reserve(post.size());
    for (const ChainRecord& record : post) {
        lambdas.push_back(record.lambda);
    }
    summary.ess_lambda = ess(lambdas);
    summary.runtime_seconds = chain.runtime_seconds;
    summary.ess_per_second = chain.runtime_seconds > 0.0
                                 ? summary.ess_lambda / chain.runtime_seconds
                                 : 0.0;
    return summary;
}

}  // namespace phyjump
