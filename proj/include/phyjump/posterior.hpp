#pragma once

#include <span>
#include <vector>

#include "phyjump/pmcmc.hpp"
#include "phyjump/tree.hpp"

namespace phyjump {

/// Per-node cluster ids induced by a jump vector, canonicalized to
/// first-occurrence order over ascending node ids.
struct ClusterAssignment {
    std::vector<int> z;

    friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

ClusterAssignment assignment_from_jumps(const Tree& tree, const JumpVector& jumps);

/// Fraction of post-burn-in samples with b_i >= 1, per branch.
std::vector<double> branch_probabilities(const Chain& chain);

/// Row-major N x N posterior co-clustering matrix P(z_i = z_i' | X) over the
/// post-burn-in samples. Symmetric with unit diagonal.
std::vector<double> coclustering(const Tree& tree, const Chain& chain);

struct BinderResult {
    ClusterAssignment assignment;
    JumpVector jumps;   // the sample's generating b
    int iteration;      // absolute chain index of the winning sample
    double score;       // l(Z-hat) under the first-half co-clustering estimate
};

/// Binder-loss median: estimates pairwise co-clustering from the first half
/// of the post-burn-in chain, scans the second half's assignments for the
/// maximizer of l(Z) = sum_{i<i'} 1[z_i = z_i'] (P(z_i=z_i'|X) - 1/2), ties
/// broken by earliest iteration.
BinderResult binder_median(const Tree& tree, const Chain& chain);

/// Bayes factor of M1 (any jump) against M0 (b == 0): posterior odds from the
/// chain over closed-form prior odds. P(M0) = exp(-lambda * total) for fixed
/// lambda, rho / (rho + total) for the learned Gamma(1, rho) rate. Returns
/// +inf when no post-burn-in sample is jump-free, 0 when all are.
double bayes_factor(const Chain& chain, const RateConfig& rate, double total_rescaled_length);

/// Effective sample size by Geyer's initial-positive-sequence truncation,
/// clamped to (0, M]. A constant sequence yields M with a warning on stderr.
double ess(std::span<const double> values);

struct Summary {
    std::vector<double> branch_probabilities;
    std::vector<double> coclustering;  // row-major N x N
    BinderResult median;
    double bayes_factor;  // may be +inf
    double log10_bayes_factor;
    double ess_lambda;
    double ess_per_second;
    double runtime_seconds;
};

Summary summarize(const Tree& tree, const Chain& chain);

}  // namespace phyjump
