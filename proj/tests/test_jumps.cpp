#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"

#include "phyjump/jumps.hpp"
#include "phyjump/rng.hpp"
#include "phyjump/tree.hpp"

using namespace phyjump;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE("jumps") {

TEST_CASE("poisson log pmf") {
    // P(0; 1) = P(1; 1) = e^-1.
    CHECK(poisson_log_pmf(0, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(poisson_log_pmf(1, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    // log P(3; 2.5) = 3 log 2.5 - 2.5 - log 6.
    CHECK(poisson_log_pmf(3, 2.5) ==
          doctest::Approx(3.0 * std::log(2.5) - 2.5 - std::log(6.0)).epsilon(1e-14));
    CHECK(poisson_log_pmf(0, 0.0) == 0.0);
    CHECK(poisson_log_pmf(2, 0.0) == -kInf);
    CHECK(poisson_log_pmf(-1, 1.0) == -kInf);
}

TEST_CASE("prior pmf sums per-branch terms") {
    const Tree r = rescale(parse_newick("((A:1,B:1):1,C:1);"));
    const JumpVector b{1, 0, 2, 0};
    double expected = 0.0;
    for (int k = 0; k < r.num_branches(); ++k) {
        expected += poisson_log_pmf(b[static_cast<std::size_t>(k)], 0.8 * r.branch_length(k));
    }
    CHECK(prior_log_pmf(b, 0.8, r) == doctest::Approx(expected).epsilon(1e-14));

    Tree zero = r;
    zero.nodes[1].branch_length = 0.0;
    CHECK(prior_log_pmf({1, 0, 0, 0}, 0.8, zero) == -kInf);
    CHECK(prior_log_pmf({0, 0, 0, 0}, 0.8, zero) > -kInf);
}

TEST_CASE("rate config factories and resolution") {
    CHECK_THROWS_AS((void)RateConfig::fixed(0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)RateConfig::learned(-1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)RateConfig::learned_mean_jumps(0.0), std::invalid_argument);

    const RateConfig fixed = RateConfig::fixed(0.3);
    CHECK(fixed.mode == RateConfig::Mode::fixed);
    CHECK(fixed.resolved(5.0).lambda == doctest::Approx(0.3));

    // rho derives from the prior mean jump count: E[lambda] * total = mean.
    const RateConfig learned = RateConfig::learned_mean_jumps(2.0).resolved(6.0);
    CHECK(learned.rho == doctest::Approx(3.0));
    CHECK_THROWS_AS((void)RateConfig::learned_mean_jumps(2.0).resolved(0.0),
                    std::invalid_argument);

    // An explicit rho survives resolution untouched.
    CHECK(RateConfig::learned(1.5).resolved(10.0).rho == doctest::Approx(1.5));
}

TEST_CASE("sample_jumps matches the poisson mean") {
    const Tree r = rescale(parse_newick("((A:1,B:1):1,(C:1,D:1):1);"));
    SplitMix64 rng = SplitMix64::keyed(5);
    const int n = 20000;
    double sum0 = 0.0;
    for (int i = 0; i < n; ++i) {
        const JumpVector b = sample_jumps(2.0, r, rng);
        REQUIRE(b.size() == static_cast<std::size_t>(r.num_branches()));
        sum0 += b[0];
    }
    // Branch 0 has rescaled length 0.5, so counts are Poisson(1).
    CHECK(sum0 / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("resample proposals cancel the prior in the acceptance ratio") {
    const Tree r = rescale(parse_newick("((A:1,B:1):1,(C:1,D:1):1);"));
    SplitMix64 rng = SplitMix64::keyed(9);
    JumpVector b{1, 0, 2, 0, 0, 1};
    int resamples = 0;
    int swaps = 0;
    for (int i = 0; i < 400; ++i) {
        const Proposal p = propose(b, 0.7, r, rng);
        REQUIRE(p.jumps.size() == b.size());
        if (p.swap_move) {
            swaps += 1;
            CHECK(p.log_q_ratio == 0.0);
            // A swap permutes two adjacent entries and keeps the rest.
            int moved = 0;
            int total_before = 0;
            int total_after = 0;
            for (std::size_t k = 0; k < b.size(); ++k) {
                moved += p.jumps[k] != b[k] ? 1 : 0;
                total_before += b[k];
                total_after += p.jumps[k];
            }
            CHECK(total_before == total_after);
            CHECK(moved <= 2);
        } else {
            resamples += 1;
            int moved = 0;
            for (std::size_t k = 0; k < b.size(); ++k) {
                moved += p.jumps[k] != b[k] ? 1 : 0;
            }
            CHECK(moved <= 1);
            // q(b*|b)/q(b|b*) is exactly the prior ratio, so the MH ratio
            // reduces to the likelihood ratio.
            const double cancel = prior_log_pmf(p.jumps, 0.7, r) - prior_log_pmf(b, 0.7, r) +
                                  p.log_q_ratio;
            CHECK(cancel == doctest::Approx(0.0).epsilon(1e-12));
        }
        if (i % 3 == 0) {
            b = p.jumps;  // walk around the state space a bit
        }
    }
    CHECK(resamples > 100);
    CHECK(swaps > 100);
}

TEST_CASE("swap on a star tree is an identity proposal") {
    // All branches hang off the root, so no parent-child pair exists.
    const Tree star = parse_newick("(A:1,B:1,C:1);");
    SplitMix64 rng = SplitMix64::keyed(21);
    const JumpVector b{2, 0, 1};
    bool saw_identity_swap = false;
    for (int i = 0; i < 100; ++i) {
        const Proposal p = propose(b, 1.0, star, rng);
        if (p.swap_move) {
            CHECK(p.jumps == b);
            CHECK(p.log_q_ratio == 0.0);
            saw_identity_swap = true;
        }
    }
    CHECK(saw_identity_swap);
}

TEST_CASE("rate posterior is the conjugate gamma") {
    const Tree r = rescale(parse_newick("((A:1,B:1):1,(C:1,D:1):1);"));
    const double total = r.total_branch_length();
    const JumpVector b{1, 0, 0, 2, 0, 0};
    const double shape = 1.0 + 3.0;
    const double rate = 1.5 + total;
    SplitMix64 rng = SplitMix64::keyed(31);
    const int n = 40000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lambda = sample_rate_posterior(b, 1.5, r, rng);
        CHECK(lambda > 0.0);
        sum += lambda;
        sq += lambda * lambda;
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(shape / rate).epsilon(0.02));
    CHECK(sq / n - mean * mean == doctest::Approx(shape / (rate * rate)).epsilon(0.08));
}

}  // TEST_SUITE
