#include "phyjump/pmcmc.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "phyjump/crf.hpp"
#include "phyjump/smc.hpp"

namespace phyjump {

void McmcConfig::validate() const {
    if (iterations < 2) {
        throw std::invalid_argument("need at least 2 iterations");
    }
    if (!(burn_in_fraction > 0.0 && burn_in_fraction < 1.0)) {
        throw std::invalid_argument("burn-in fraction must lie in (0,1)");
    }
    if (particles < 1) {
        throw std::invalid_argument("need at least 1 particle");
    }
    if (!(discount > 0.0 && discount < 1.0)) {
        throw std::invalid_argument("discount must lie in (0,1)");
    }
}

Chain run(const Tree& tree, const McmcConfig& config) {
    config.validate();
    tree.validate();
    if (tree.num_observations() == 0) {
        throw std::invalid_argument("tree carries no observations");
    }
    const auto start = std::chrono::steady_clock::now();

    Tree rescaled = rescale(tree);
    if (config.normalize_branches) {
        rescaled = normalize_branch_lengths(rescaled);
    }
    const double total_length = rescaled.total_branch_length();
    const RateConfig rate = config.rate.resolved(total_length);
    const BaseMeasure base = BaseMeasure::uniform(tree.alphabet_size);
    const int branches = rescaled.num_branches();

    Chain chain;
    chain.config = config;
    chain.rate = rate;
    chain.total_rescaled_length = total_length;
    chain.rescaled_lengths.resize(static_cast<std::size_t>(branches));
    for (int i = 0; i < branches; ++i) {
        chain.rescaled_lengths[static_cast<std::size_t>(i)] = rescaled.branch_length(i);
    }
    chain.records.reserve(static_cast<std::size_t>(config.iterations));

    SplitMix64 init_rng = SplitMix64::keyed(config.seed, streams::init);
    double lambda = rate.mode == RateConfig::Mode::fixed
                        ? rate.lambda
                        : sample_gamma(init_rng, 1.0, rate.rho);
    JumpVector jumps = branches > 0 ? sample_jumps(lambda, rescaled, init_rng) : JumpVector{};

    SmcOptions smc_options;
    smc_options.particles = config.particles;
    smc_options.seed = config.seed;
    smc_options.stream = 0;  // iteration number on later calls
    smc_options.adaptive_resampling = config.adaptive_resampling;
    smc_options.threads = config.threads;

    double log_lik = estimate_log_likelihood(rescaled, jumps, config.discount, base,
                                             smc_options).log_likelihood;
    chain.smc_calls = 1;
    if (log_lik == -std::numeric_limits<double>::infinity()) {
        throw NumericalError("all particle weights are zero on the initial state");
    }

    for (int iter = 1; iter <= config.iterations; ++iter) {
        if (rate.mode == RateConfig::Mode::learned) {
            SplitMix64 rate_rng = SplitMix64::keyed(config.seed, streams::rate,
                                                    static_cast<std::uint64_t>(iter));
            lambda = sample_rate_posterior(jumps, rate.rho, rescaled, rate_rng);
        }
        char move = 'g';
        bool accepted = true;
        if (branches > 0) {
            SplitMix64 propose_rng = SplitMix64::keyed(config.seed, streams::propose,
                                                       static_cast<std::uint64_t>(iter));
            const Proposal proposal = propose(jumps, lambda, rescaled, propose_rng);
            move = proposal.swap_move ? 's' : 'r';
            if (proposal.jumps == jumps) {
                // Rerunning the estimator on the incumbent would break the
                // pseudo-marginal invariant; the ratio is exactly 1.
                chain.noop_proposals += 1;
            } else {
                smc_options.stream = static_cast<std::uint64_t>(iter);
                const double log_lik_star =
                    estimate_log_likelihood(rescaled, proposal.jumps, config.discount, base,
                                            smc_options).log_likelihood;
                chain.smc_calls += 1;
                const double log_alpha =
                    log_lik_star - log_lik +
                    prior_log_pmf(proposal.jumps, lambda, rescaled) -
                    prior_log_pmf(jumps, lambda, rescaled) + proposal.log_q_ratio;
                SplitMix64 accept_rng = SplitMix64::keyed(config.seed, streams::accept,
                                                          static_cast<std::uint64_t>(iter));
                accepted = log_alpha >= 0.0 || std::log(uniform_pos(accept_rng)) < log_alpha;
                if (accepted) {
                    jumps = proposal.jumps;
                    log_lik = log_lik_star;
                }
            }
        }
        chain.records.push_back({lambda, jumps, log_lik, accepted, move});
    }

    chain.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return chain;
}

}  // namespace phyjump
