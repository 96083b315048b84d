#include "phyjump/smc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phyjump {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::vector<ObservationStep> observation_order(const Tree& tree, const PrunedTree& pruned) {
    std::vector<ObservationStep> order;
    order.reserve(static_cast<std::size_t>(tree.num_observations()));
    std::deque<int> queue{PrunedTree::root_group()};
    while (!queue.empty()) {
        const int g = queue.front();
        queue.pop_front();
        // Group observations are stored in (node id, index) order already.
        for (const PrunedObservation& obs :
             pruned.group_observations[static_cast<std::size_t>(g)]) {
            order.push_back({g, obs.node, obs.index, obs.value});
        }
        for (int child : pruned.group_children[static_cast<std::size_t>(g)]) {
            queue.push_back(child);
        }
    }
    if (static_cast<int>(order.size()) != tree.num_observations()) {
        throw std::logic_error("pruned tree does not cover the tree's observations");
    }
    return order;
}

namespace {

// Ancestor draw: S iid picks proportional to the natural-scale weights.
void resample(std::vector<CrfState>& particles, const std::vector<double>& weights,
              SplitMix64& rng) {
    const std::size_t S = particles.size();
    std::vector<double> cumulative(S);
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        total += weights[s];
        cumulative[s] = total;
    }
    std::vector<CrfState> next;
    next.reserve(S);
    for (std::size_t s = 0; s < S; ++s) {
        const double u = uniform01(rng) * total;
        const std::size_t pick = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        next.push_back(particles[std::min(pick, S - 1)]);
    }
    particles = std::move(next);
}

SmcResult run_filter(const Tree& tree, const JumpVector& jumps, double discount,
                     const BaseMeasure& base, const SmcOptions& options, bool parallel) {
    if (options.particles < 1) {
        throw std::invalid_argument("at least one particle required");
    }
    if (tree.num_observations() == 0) {
        throw std::invalid_argument("at least one observation required");
    }
    const PrunedTree pruned = prune(tree, jumps);
    const std::vector<ObservationStep> order = observation_order(tree, pruned);

    // One derived seed per (seed, stream) call; every per-particle engine is
    // keyed by (call, step, particle), so results do not depend on scheduling.
    const std::uint64_t call_seed = SplitMix64::keyed(options.seed, streams::smc,
                                                      options.stream)();

    const int S = options.particles;
    std::vector<CrfState> particles(static_cast<std::size_t>(S),
                                    CrfState(&pruned, discount, base));
    std::vector<double> weights(static_cast<std::size_t>(S));
    std::vector<double> log_weights;  // carried across steps in adaptive mode
    if (options.adaptive_resampling) {
        log_weights.assign(static_cast<std::size_t>(S), 0.0);
    }
    double log_likelihood = 0.0;

#ifdef _OPENMP
    const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#else
    (void)parallel;
#endif

    for (std::size_t t = 0; t < order.size(); ++t) {
        const ObservationStep& obs = order[t];

        const auto expand = [&](int s) {
            CrfState& particle = particles[static_cast<std::size_t>(s)];
            const double w = particle.predictive(obs.group, obs.value);
            weights[static_cast<std::size_t>(s)] = w;
            if (w > 0.0) {
                SplitMix64 engine = SplitMix64::keyed(call_seed, streams::seat,
                                                      static_cast<std::uint64_t>(t),
                                                      static_cast<std::uint64_t>(s));
                particle.seat(obs.group, obs.value, engine);
            }
        };
#ifdef _OPENMP
        if (parallel) {
#pragma omp parallel for schedule(static) num_threads(threads)
            for (int s = 0; s < S; ++s) {
                expand(s);
            }
        } else {
            for (int s = 0; s < S; ++s) {
                expand(s);
            }
        }
#else
        for (int s = 0; s < S; ++s) {
            expand(s);
        }
#endif

        SplitMix64 resample_rng = SplitMix64::keyed(call_seed, streams::resample,
                                                    static_cast<std::uint64_t>(t));
        if (!options.adaptive_resampling) {
            double total = 0.0;
            for (int s = 0; s < S; ++s) {
                total += weights[static_cast<std::size_t>(s)];
            }
            if (!(total > 0.0)) {
                return {kNegInf, static_cast<int>(t)};
            }
            log_likelihood += std::log(total / S);
            resample(particles, weights, resample_rng);
            continue;
        }

        double max_lw = kNegInf;
        for (int s = 0; s < S; ++s) {
            double& lw = log_weights[static_cast<std::size_t>(s)];
            const double w = weights[static_cast<std::size_t>(s)];
            lw += w > 0.0 ? std::log(w) : kNegInf;
            max_lw = std::max(max_lw, lw);
        }
        if (max_lw == kNegInf) {
            return {kNegInf, static_cast<int>(t)};
        }
        double sum = 0.0;
        double sum_sq = 0.0;
        for (int s = 0; s < S; ++s) {
            const double e = std::exp(log_weights[static_cast<std::size_t>(s)] - max_lw);
            weights[static_cast<std::size_t>(s)] = e;
            sum += e;
            sum_sq += e * e;
        }
        if (sum * sum / sum_sq < S / 2.0) {
            log_likelihood += max_lw + std::log(sum / S);
            resample(particles, weights, resample_rng);
            log_weights.assign(static_cast<std::size_t>(S), 0.0);
        }
    }

    if (options.adaptive_resampling) {
        // Fold any weight mass left since the last resampling barrier.
        double max_lw = kNegInf;
        for (double lw : log_weights) {
            max_lw = std::max(max_lw, lw);
        }
        double sum = 0.0;
        for (double lw : log_weights) {
            sum += std::exp(lw - max_lw);
        }
        log_likelihood += max_lw + std::log(sum / S);
    }
    return {log_likelihood, -1};
}

}  // namespace

SmcResult estimate_log_likelihood(const Tree& tree, const JumpVector& jumps, double discount,
                                  const BaseMeasure& base, const SmcOptions& options) {
    return run_filter(tree, jumps, discount, base, options, options.threads != 1);
}

SmcResult estimate_log_likelihood_serial(const Tree& tree, const JumpVector& jumps,
                                         double discount, const BaseMeasure& base,
                                         const SmcOptions& options) {
    return run_filter(tree, jumps, discount, base, options, false);
}

}  // namespace phyjump
