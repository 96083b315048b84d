#include "phyjump/jumps.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace phyjump {

RateConfig RateConfig::fixed(double lambda) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("fixed rate must be positive");
    }
    RateConfig c;
    c.mode = Mode::fixed;
    c.lambda = lambda;
    return c;
}

RateConfig RateConfig::learned(double rho) {
    if (!(rho > 0.0)) {
        throw std::invalid_argument("rho must be positive");
    }
    RateConfig c;
    c.mode = Mode::learned;
    c.rho = rho;
    return c;
}

RateConfig RateConfig::learned_mean_jumps(double prior_mean_jumps) {
    if (!(prior_mean_jumps > 0.0)) {
        throw std::invalid_argument("prior mean jump count must be positive");
    }
    RateConfig c;
    c.mode = Mode::learned;
    c.rho = 0.0;
    c.prior_mean_jumps = prior_mean_jumps;
    return c;
}

RateConfig RateConfig::resolved(double total_length) const {
    RateConfig c = *this;
    if (c.mode == Mode::fixed) {
        if (!(c.lambda > 0.0)) {
            throw std::invalid_argument("fixed rate must be positive");
        }
        return c;
    }
    if (c.rho > 0.0) {
        return c;
    }
    // E[lambda] = 1/rho, so E[jumps] = total/rho = prior_mean_jumps.
    if (!(total_length > 0.0)) {
        throw std::invalid_argument(
            "cannot derive rho from the prior mean jump count on a tree with zero total "
            "length; give rho explicitly");
    }
    if (!(c.prior_mean_jumps > 0.0)) {
        throw std::invalid_argument("prior mean jump count must be positive");
    }
    c.rho = total_length / c.prior_mean_jumps;
    return c;
}

double poisson_log_pmf(int count, double mean) {
    if (count < 0) {
        return -std::numeric_limits<double>::infinity();
    }
    if (mean <= 0.0) {
        return count == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    return count * std::log(mean) - mean - std::lgamma(static_cast<double>(count) + 1.0);
}

double prior_log_pmf(const JumpVector& jumps, double lambda, const Tree& rescaled) {
    if (static_cast<int>(jumps.size()) != rescaled.num_branches()) {
        throw std::invalid_argument("jump vector length mismatch");
    }
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("lambda must be positive");
    }
    double total = 0.0;
    for (int i = 0; i < rescaled.num_branches(); ++i) {
        total += poisson_log_pmf(jumps[static_cast<std::size_t>(i)],
                                 lambda * rescaled.branch_length(i));
    }
    return total;
}

JumpVector sample_jumps(double lambda, const Tree& rescaled, SplitMix64& rng) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("lambda must be positive");
    }
    JumpVector jumps(static_cast<std::size_t>(rescaled.num_branches()));
    for (int i = 0; i < rescaled.num_branches(); ++i) {
        jumps[static_cast<std::size_t>(i)] =
            sample_poisson(rng, lambda * rescaled.branch_length(i));
    }
    return jumps;
}

Proposal propose(const JumpVector& jumps, double lambda, const Tree& rescaled,
                 SplitMix64& rng) {
    if (static_cast<int>(jumps.size()) != rescaled.num_branches()) {
        throw std::invalid_argument("jump vector length mismatch");
    }
    if (rescaled.num_branches() == 0) {
        throw std::invalid_argument("no branches to propose on");
    }
    Proposal out{jumps, 0.0, uniform01(rng) < 0.5};
    if (!out.swap_move) {
        const int branch = static_cast<int>(
            uniform_below(rng, static_cast<std::uint64_t>(rescaled.num_branches())));
        const double mean = lambda * rescaled.branch_length(branch);
        const int fresh = sample_poisson(rng, mean);
        const int old = out.jumps[static_cast<std::size_t>(branch)];
        out.jumps[static_cast<std::size_t>(branch)] = fresh;
        out.log_q_ratio = poisson_log_pmf(old, mean) - poisson_log_pmf(fresh, mean);
        return out;
    }
    // Adjacent pairs: (branch above node p, branch above node k) for every
    // node k whose parent p is not the root. Exchanging counts is symmetric.
    std::vector<std::pair<int, int>> pairs;
    for (int k = 1; k < rescaled.num_nodes(); ++k) {
        const int p = rescaled.nodes[static_cast<std::size_t>(k)].parent;
        if (p != Tree::root()) {
            pairs.emplace_back(Tree::branch_of(p), Tree::branch_of(k));
        }
    }
    if (pairs.empty()) {
        return out;  // no adjacent pair exists; identity move
    }
    const auto [a, b] = pairs[uniform_below(rng, pairs.size())];
    std::swap(out.jumps[static_cast<std::size_t>(a)], out.jumps[static_cast<std::size_t>(b)]);
    return out;
}

double sample_rate_posterior(const JumpVector& jumps, double rho, const Tree& rescaled,
                             SplitMix64& rng) {
    if (!(rho > 0.0)) {
        throw std::invalid_argument("rho must be positive");
    }
    int total_jumps = 0;
    for (int b : jumps) {
        total_jumps += b;
    }
    return sample_gamma(rng, 1.0 + total_jumps, rho + rescaled.total_branch_length());
}

}  // namespace phyjump
