// Benchmarks the OpenMP particle filter against the serial reference and
// verifies that both produce bit-identical estimates (a hard contract: the
// parallel path must not change any result).

#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "phyjump/crf.hpp"
#include "phyjump/jumps.hpp"
#include "phyjump/rng.hpp"
#include "phyjump/smc.hpp"
#include "phyjump/synth.hpp"
#include "phyjump/tree.hpp"

using namespace phyjump;

namespace {

double time_ms(const auto& body, int reps) {
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
        body(r);
    }
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    int leaves = 64;
    int reps = 20;
    std::uint64_t seed = 1;
    std::vector<int> particle_counts{64, 256, 1024};

    CLI::App app{"Serial vs. OpenMP particle filter benchmark"};
    app.add_option("--leaves", leaves, "tree size");
    app.add_option("--reps", reps, "repetitions per timing");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--particles", particle_counts, "particle counts to sweep");
    CLI11_PARSE(app, argc, argv);

    SplitMix64 tree_rng = SplitMix64::keyed(seed, streams::tree);
    Tree tree = random_binary_tree(leaves, tree_rng);
    SplitMix64 data_rng = SplitMix64::keyed(seed, streams::data);
    for (int node = 0; node < tree.num_nodes(); ++node) {
        if (tree.is_leaf(node)) {
            tree.nodes[static_cast<std::size_t>(node)].observations.push_back(
                static_cast<int>(uniform_below(data_rng, 2)));
        }
    }
    const Tree rescaled = rescale(tree);
    SplitMix64 jump_rng = SplitMix64::keyed(seed, streams::generate);
    const JumpVector jumps = sample_jumps(1.0, rescaled, jump_rng);
    const BaseMeasure base = BaseMeasure::uniform(2);

    std::printf("leaves=%d observations=%d reps=%d\n", leaves, tree.num_observations(), reps);
    std::printf("%10s %12s %12s %9s %6s\n", "particles", "serial_ms", "parallel_ms", "speedup",
                "match");
    bool all_match = true;
    for (int particles : particle_counts) {
        SmcOptions options;
        options.particles = particles;
        options.seed = seed;

        std::vector<double> serial(static_cast<std::size_t>(reps));
        std::vector<double> parallel(static_cast<std::size_t>(reps));
        const double serial_ms = time_ms(
            [&](int r) {
                SmcOptions o = options;
                o.stream = static_cast<std::uint64_t>(r);
                o.threads = 1;
                serial[static_cast<std::size_t>(r)] =
                    estimate_log_likelihood_serial(tree, jumps, 0.5, base, o).log_likelihood;
            },
            reps);
        const double parallel_ms = time_ms(
            [&](int r) {
                SmcOptions o = options;
                o.stream = static_cast<std::uint64_t>(r);
                parallel[static_cast<std::size_t>(r)] =
                    estimate_log_likelihood(tree, jumps, 0.5, base, o).log_likelihood;
            },
            reps);

        bool match = true;
        for (int r = 0; r < reps; ++r) {
            match = match && std::bit_cast<std::uint64_t>(serial[static_cast<std::size_t>(r)]) ==
                                 std::bit_cast<std::uint64_t>(parallel[static_cast<std::size_t>(r)]);
        }
        all_match = all_match && match;
        std::printf("%10d %12.3f %12.3f %9.2f %6s\n", particles, serial_ms, parallel_ms,
                    serial_ms / parallel_ms, match ? "yes" : "NO");
    }
    if (!all_match) {
        std::fprintf(stderr, "parallel estimates diverged from the serial reference\n");
        return 1;
    }
    return 0;
}
