#pragma once

#include <cstdint>
#include <vector>

#include "phyjump/crf.hpp"
#include "phyjump/tree.hpp"

namespace phyjump {

struct SmcOptions {
    int particles = 100;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;         // distinguishes repeated calls under one seed
    bool adaptive_resampling = false; // resample only when ESS < particles/2
    int threads = 0;                  // 0 = default; parallel path needs OpenMP
};

struct ObservationStep {
    int group;
    int node;
    int index;  // position within the node's observation list
    int value;
};

/// Deterministic incorporation order: breadth-first over pruned-tree groups
/// from the root, then by node id, then by observation index.
std::vector<ObservationStep> observation_order(const Tree& tree, const PrunedTree& pruned);

struct SmcResult {
    double log_likelihood;    // log p-hat(X | b); -inf when all weights vanish
    int degenerate_step = -1; // step where total weight hit zero, -1 if none
};

/// Particle-filter estimate of log p(X | b): prunes by `jumps`, seats the
/// observations in observation_order, weights each particle by the predictive
/// of the incorporated observation, and resamples multinomially. E[p-hat] is
/// the exact marginal likelihood. Bit-reproducible for fixed (seed, stream,
/// particles, adaptive) regardless of thread count.
SmcResult estimate_log_likelihood(const Tree& tree, const JumpVector& jumps, double discount,
                                  const BaseMeasure& base, const SmcOptions& options);

/// Single-threaded reference; must match estimate_log_likelihood bit-for-bit.
SmcResult estimate_log_likelihood_serial(const Tree& tree, const JumpVector& jumps,
                                         double discount, const BaseMeasure& base,
                                         const SmcOptions& options);

}  // namespace phyjump
