#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"

#include "phyjump/jumps.hpp"
#include "phyjump/oracle.hpp"
#include "phyjump/tree.hpp"

using namespace phyjump;

namespace {

Tree two_leaf(std::vector<std::pair<std::string, int>> records) {
    Tree t = parse_newick("(A:1,B:1);");
    t.alphabet_size = 2;
    attach_observations(t, records);
    return t;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("closed-form pair probabilities") {
    // Two equal observations in one restaurant, d = 0.5:
    // 1/2 * ((1-d)/1 + d * 1/2) = 3/8.
    const Tree same = two_leaf({{"A", 1}, {"B", 1}});
    CHECK(exact_likelihood(same, {0, 0}, 0.5, BaseMeasure::uniform(2)) ==
          doctest::Approx(0.375).epsilon(1e-15));
    // Unequal pair: 1/2 * (d * 1/2) = 1/8.
    const Tree diff = two_leaf({{"A", 1}, {"B", 0}});
    CHECK(exact_likelihood(diff, {0, 0}, 0.5, BaseMeasure::uniform(2)) ==
          doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("four observations marginalize over seating paths") {
    // Values 1,1,0,1 in one restaurant, d = 1/2. The second observation
    // either joins (mass 1/2, leaving one table of two) or opens (mass 1/4,
    // two singletons); continuing each branch by hand:
    //   join: 1/2*1/2 * 1/8 * 2/3 = 1/48
    //   open: 1/2*1/4 * 1/4 * 7/12 = 7/384
    // and 1/48 + 7/384 = 5/128.
    const Tree t = two_leaf({{"A", 1}, {"A", 1}, {"B", 0}, {"B", 1}});
    CHECK(exact_likelihood(t, {0, 0}, 0.5, BaseMeasure::uniform(2)) ==
          doctest::Approx(5.0 / 128.0).epsilon(1e-15));
}

TEST_CASE("likelihood ignores observation insertion order") {
    const std::vector<std::pair<std::string, int>> base{
        {"A", 1}, {"A", 0}, {"B", 1}, {"B", 1}};
    std::vector<std::pair<std::string, int>> shuffled{
        {"B", 1}, {"A", 0}, {"B", 1}, {"A", 1}};
    Tree t1 = parse_newick("(A:1,B:1);");
    Tree t2 = parse_newick("(A:1,B:1);");
    t1.alphabet_size = t2.alphabet_size = 2;
    attach_observations(t1, base);
    attach_observations(t2, shuffled);
    for (const JumpVector& b : {JumpVector{0, 0}, JumpVector{1, 0}, JumpVector{1, 2}}) {
        CHECK(exact_likelihood(t1, b, 0.5, BaseMeasure::uniform(2)) ==
              doctest::Approx(exact_likelihood(t2, b, 0.5, BaseMeasure::uniform(2)))
                  .epsilon(1e-14));
    }
}

TEST_CASE("stacked layers collapse to a powered discount") {
    // Chain root -> A -> B with one jump per edge versus root -> B with two
    // jumps on the single edge: the intermediate distribution integrates out.
    Tree chain = parse_newick("((B:1)A:1);");
    Tree direct = parse_newick("(B:1);");
    chain.alphabet_size = direct.alphabet_size = 2;
    const std::vector<std::pair<std::string, int>> records{
        {"B", 0}, {"B", 1}, {"B", 1}, {"B", 0}};
    attach_observations(chain, records);
    attach_observations(direct, records);
    const double via_chain = exact_likelihood(chain, {1, 1}, 0.5, BaseMeasure::uniform(2));
    const double via_power = exact_likelihood(direct, {2}, 0.5, BaseMeasure::uniform(2));
    CHECK(via_chain == doctest::Approx(via_power).epsilon(1e-13));
}

TEST_CASE("posterior enumeration normalizes and matches direct recomputation") {
    Tree t = parse_newick("((A:1,B:1):1,(C:1,D:1):1);");
    t.alphabet_size = 2;
    attach_observations(t, std::vector<std::pair<std::string, int>>{
                               {"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}});
    const Tree r = rescale(t);
    const BaseMeasure base = BaseMeasure::uniform(2);
    const JumpPosterior post = exact_jump_posterior(r, 0.5, base, 0.15, {2, 8, 8});

    REQUIRE(post.support.size() == 729);  // 3^6 capped vectors
    double total = 0.0;
    for (double p : post.probability) {
        CHECK(p >= 0.0);
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // Spot-check two support points against prior x likelihood directly.
    for (const JumpVector& b : {JumpVector{0, 0, 0, 0, 0, 0}, JumpVector{1, 0, 0, 0, 2, 0}}) {
        const double expected = std::exp(prior_log_pmf(b, 0.15, r) +
                                         std::log(exact_likelihood(r, b, 0.5, base, {2, 8, 32})) -
                                         post.log_normalizer);
        CHECK(post.prob(b) == doctest::Approx(expected).epsilon(1e-10));
    }

    // Off-support vectors report zero.
    CHECK(post.prob({3, 0, 0, 0, 0, 0}) == 0.0);
}

TEST_CASE("size guards refuse oversized instances") {
    Tree big = parse_newick("(A:1,B:1);");
    big.alphabet_size = 2;
    std::vector<std::pair<std::string, int>> many;
    for (int i = 0; i < 9; ++i) {
        many.emplace_back(i % 2 == 0 ? "A" : "B", 1);
    }
    attach_observations(big, many);
    CHECK_THROWS_AS((void)exact_likelihood(big, {0, 0}, 0.5, BaseMeasure::uniform(2)),
                    std::invalid_argument);

    Tree groups = parse_newick("((A:1,B:1):1,(C:1,D:1):1);");
    groups.alphabet_size = 2;
    attach_observations(groups, std::vector<std::pair<std::string, int>>{{"A", 1}});
    CHECK_THROWS_AS(
        (void)exact_likelihood(groups, {1, 1, 1, 1, 1, 0}, 0.5, BaseMeasure::uniform(2),
                               {2, 8, 4}),
        std::invalid_argument);

    // 14 branches at b_max 2 would enumerate 3^14 vectors.
    Tree wide = parse_newick("(((A:1,B:1):1,(C:1,D:1):1):1,((E:1,F:1):1,(G:1,H:1):1):1);");
    wide.alphabet_size = 2;
    attach_observations(wide, std::vector<std::pair<std::string, int>>{{"A", 1}, {"E", 0}});
    CHECK_THROWS_AS((void)exact_jump_posterior(rescale(wide), 0.5, BaseMeasure::uniform(2), 0.5),
                    std::invalid_argument);
}

}  // TEST_SUITE
