#pragma once

#include "phyjump/rng.hpp"
#include "phyjump/tree.hpp"

namespace phyjump {

/// Prior on the jump rate. In learned mode either rho is given directly or it
/// is derived from prior_mean_jumps once the rescaled total length is known:
/// rho = total_length / prior_mean_jumps (so E[lambda] * total = mean jumps).
struct RateConfig {
    enum class Mode { fixed, learned };

    Mode mode = Mode::learned;
    double lambda = 1.0;           // fixed mode
    double rho = 0.0;              // learned mode, Gamma(1, rho); 0 = derive
    double prior_mean_jumps = 1.0; // used only when rho == 0

    static RateConfig fixed(double lambda);
    static RateConfig learned(double rho);
    static RateConfig learned_mean_jumps(double prior_mean_jumps);

    /// Fills in rho from prior_mean_jumps when needed; throws
    /// std::invalid_argument when that requires a zero total length.
    RateConfig resolved(double total_length) const;
};

double poisson_log_pmf(int count, double mean);

/// log P(b | lambda) = sum_i log Poisson(b_i; lambda * L_i) on the rescaled
/// tree; -inf when a zero-length branch carries a jump.
double prior_log_pmf(const JumpVector& jumps, double lambda, const Tree& rescaled);

JumpVector sample_jumps(double lambda, const Tree& rescaled, SplitMix64& rng);

struct Proposal {
    JumpVector jumps;
    double log_q_ratio;  // log q(b|b*) - log q(b*|b)
    bool swap_move;
};

/// Half/half mixture of (a) resampling one branch's count from its Poisson
/// prior and (b) swapping the counts of a parent-child branch pair. A swap
/// on a tree without adjacent branch pairs is a no-op.
Proposal propose(const JumpVector& jumps, double lambda, const Tree& rescaled, SplitMix64& rng);

/// Conjugate draw lambda | b ~ Gamma(1 + sum b_i, rho + total rescaled length).
double sample_rate_posterior(const JumpVector& jumps, double rho, const Tree& rescaled,
                             SplitMix64& rng);

}  // namespace phyjump
