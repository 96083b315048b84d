#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "phyjump/jumps.hpp"
#include "phyjump/tree.hpp"

namespace phyjump {

/// Unrecoverable estimator degeneracy: the initial likelihood estimate is
/// -inf, so every proposal would be rejected forever.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct McmcConfig {
    int iterations = 50000;
    double burn_in_fraction = 0.5;
    int particles = 100;
    double discount = 0.5;
    RateConfig rate;
    std::uint64_t seed = 0;
    bool normalize_branches = false;  // scale rescaled lengths to mean 1
    bool adaptive_resampling = false;
    int threads = 0;

    void validate() const;  // throws std::invalid_argument
};

struct ChainRecord {
    double lambda;
    JumpVector jumps;
    double log_likelihood;  // stored pseudo-marginal estimate, never refreshed
    bool accepted;
    char move;  // 'r' branch-resample, 's' swap, 'g' rate-only (no branches)
};

struct Chain {
    std::vector<ChainRecord> records;  // one per iteration
    McmcConfig config;
    RateConfig rate;                     // resolved (rho filled in)
    std::vector<double> rescaled_lengths;  // per branch, after any normalization
    double total_rescaled_length = 0.0;
    int smc_calls = 0;        // 1 initial + 1 per non-no-op proposal
    int noop_proposals = 0;
    double runtime_seconds = 0.0;

    int burn_in() const {
        return static_cast<int>(static_cast<double>(records.size()) * config.burn_in_fraction);
    }
    std::span<const ChainRecord> post_burn_in() const {
        return std::span<const ChainRecord>(records).subspan(
            static_cast<std::size_t>(burn_in()));
    }
};

/// Pseudo-marginal Metropolis-Hastings within Gibbs over (lambda, b).
/// Rescales the tree, initializes from the prior, and per iteration draws
/// lambda | b (learned mode), proposes b*, and accepts on the estimated
/// likelihood ratio. The incumbent estimate is kept, not recomputed.
Chain run(const Tree& tree, const McmcConfig& config);

}  // namespace phyjump
