#include "phyjump/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "phyjump/jumps.hpp"
#include "phyjump/smc.hpp"

namespace phyjump {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void guard_observations(const Tree& tree, const TruncationSpec& limits) {
    if (tree.num_observations() > limits.max_observations) {
        throw std::invalid_argument("instance too large: " +
                                    std::to_string(tree.num_observations()) +
                                    " observations exceed the enumeration limit of " +
                                    std::to_string(limits.max_observations));
    }
}

// Depth-first sum over all joint seating paths, probabilities carried in log
// space along each path.
class Enumerator {
public:
    Enumerator(CrfState& state, const std::vector<ObservationStep>& order)
        : state_(state), order_(order) {}

    double run() {
        total_ = 0.0L;
        descend(0, 0.0);
        return static_cast<double>(total_);
    }

private:
    void descend(std::size_t step, double log_prob) {
        if (step == order_.size()) {
            total_ += std::exp(static_cast<long double>(log_prob));
            return;
        }
        const ObservationStep& obs = order_[step];
        for (const auto& [path, prob] : state_.seat_options(obs.group, obs.value)) {
            if (!(prob > 0.0)) {
                continue;
            }
            state_.apply(path, obs.value);
            descend(step + 1, log_prob + std::log(prob));
            state_.unseat(path);
        }
    }

    CrfState& state_;
    const std::vector<ObservationStep>& order_;
    long double total_ = 0.0L;
};

}  // namespace

double exact_likelihood(const Tree& tree, const JumpVector& jumps, double discount,
                        const BaseMeasure& base, const TruncationSpec& limits) {
    guard_observations(tree, limits);
    const PrunedTree pruned = prune(tree, jumps);
    if (pruned.num_groups() > limits.max_groups) {
        throw std::invalid_argument("instance too large: " + std::to_string(pruned.num_groups()) +
                                    " groups exceed the enumeration limit of " +
                                    std::to_string(limits.max_groups));
    }
    const std::vector<ObservationStep> order = observation_order(tree, pruned);
    CrfState state(&pruned, discount, base);
    return Enumerator(state, order).run();
}

double JumpPosterior::prob(const JumpVector& jumps) const {
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] == jumps) {
            return probability[i];
        }
    }
    return 0.0;
}

JumpPosterior exact_jump_posterior(const Tree& tree, double discount, const BaseMeasure& base,
                                   double lambda, const TruncationSpec& trunc) {
    guard_observations(tree, trunc);
    if (trunc.b_max < 0) {
        throw std::invalid_argument("b_max must be nonnegative");
    }
    const int branches = tree.num_branches();
    constexpr long kMaxVectors = 200000;
    long count = 1;
    for (int i = 0; i < branches; ++i) {
        count *= trunc.b_max + 1;
        if (count > kMaxVectors) {
            throw std::invalid_argument("instance too large: more than " +
                                        std::to_string(kMaxVectors) +
                                        " jump vectors to enumerate");
        }
    }

    // Enumeration creates arbitrarily many groups, so only the observation
    // guard binds for the likelihood sub-calls.
    TruncationSpec relaxed = trunc;
    relaxed.max_groups = tree.num_nodes();

    JumpPosterior out;
    out.support.reserve(static_cast<std::size_t>(count));
    std::vector<double> log_mass;
    log_mass.reserve(static_cast<std::size_t>(count));
    double max_log = kNegInf;

    JumpVector jumps(static_cast<std::size_t>(branches), 0);
    for (;;) {
        const double prior = prior_log_pmf(jumps, lambda, tree);
        double lm = kNegInf;
        if (prior > kNegInf) {
            const double likelihood = exact_likelihood(tree, jumps, discount, base, relaxed);
            lm = likelihood > 0.0 ? prior + std::log(likelihood) : kNegInf;
        }
        out.support.push_back(jumps);
        log_mass.push_back(lm);
        max_log = std::max(max_log, lm);

        // Odometer, last branch fastest; support ends up lexicographic.
        int pos = branches - 1;
        while (pos >= 0 && jumps[static_cast<std::size_t>(pos)] == trunc.b_max) {
            jumps[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) {
            break;
        }
        jumps[static_cast<std::size_t>(pos)] += 1;
    }

    if (max_log == kNegInf) {
        throw std::runtime_error("all enumerated jump vectors have zero posterior mass");
    }
    long double total = 0.0L;
    for (double lm : log_mass) {
        total += std::exp(static_cast<long double>(lm - max_log));
    }
    out.log_normalizer = max_log + static_cast<double>(std::log(total));
    out.probability.resize(log_mass.size());
    for (std::size_t i = 0; i < log_mass.size(); ++i) {
        out.probability[i] = static_cast<double>(
            std::exp(static_cast<long double>(log_mass[i] - max_log)) / total);
    }
    return out;
}

}  // namespace phyjump
