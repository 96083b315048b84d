#pragma once

#include "phyjump/crf.hpp"
#include "phyjump/tree.hpp"

namespace phyjump {

/// Size guard for the brute-force computations; enumeration refuses larger
/// instances rather than hanging.
struct TruncationSpec {
    int b_max = 2;             // per-branch jump cap for posterior enumeration
    int max_observations = 8;
    int max_groups = 4;
};

/// Exact p(X | b) by depth-first enumeration of all joint seating paths.
/// The result is invariant to the observation order.
double exact_likelihood(const Tree& tree, const JumpVector& jumps, double discount,
                        const BaseMeasure& base, const TruncationSpec& limits = {});

struct JumpPosterior {
    std::vector<JumpVector> support;     // all b with b_i <= b_max
    std::vector<double> probability;     // normalized over the support
    double log_normalizer;               // log sum of prior x likelihood masses

    /// Probability of one enumerated vector; 0 for vectors outside the support.
    double prob(const JumpVector& jumps) const;
};

/// P(b | X, lambda, b_i <= b_max) at fixed lambda by full enumeration. Branch
/// lengths of `tree` are used as the Poisson exposures, so pass the rescaled
/// tree. The per-b group-count guard is waived (enumeration itself creates
/// many groups); max_observations still applies.
JumpPosterior exact_jump_posterior(const Tree& tree, double discount, const BaseMeasure& base,
                                   double lambda, const TruncationSpec& trunc = {});

}  // namespace phyjump
