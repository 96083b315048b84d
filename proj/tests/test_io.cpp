#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "phyjump/io.hpp"

using namespace phyjump;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Unique scratch path under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("phyjump_io_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

Chain sample_chain() {
    Chain chain;
    chain.config.iterations = 4;
    chain.config.burn_in_fraction = 0.25;
    chain.records.push_back({0.5, {0, 0, 1}, -3.25, true, 'r'});
    chain.records.push_back({0.75, {0, 2, 1}, -3.5, false, 's'});
    chain.records.push_back({1.0 / 3.0, {1, 0, 0}, -kInf, true, 'r'});
    chain.records.push_back({0.1, {0, 0, 0}, -2.875, true, 'g'});
    return chain;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0, 12345.678901234567, kInf, -kInf}) {
        const std::string text = format_double(v);
        CHECK(std::stod(text) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-1.0) == "-1");
}

TEST_CASE("fnv1a64 matches the reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(to_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
    CHECK(to_hex(0x1ULL) == "0000000000000001");
}

TEST_CASE("chain tsv round-trips records exactly") {
    const TempDir dir;
    const Chain chain = sample_chain();
    const std::string path = dir.file("chain.tsv");
    write_chain_tsv(path, chain);

    const auto records = read_chain_tsv(path, 3);
    REQUIRE(records.size() == chain.records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].lambda == chain.records[i].lambda);
        CHECK(records[i].jumps == chain.records[i].jumps);
        CHECK(records[i].log_likelihood == chain.records[i].log_likelihood);
        CHECK(records[i].accepted == chain.records[i].accepted);
        CHECK(records[i].move == chain.records[i].move);
    }

    // Rewriting the same chain produces identical bytes.
    const std::string again = dir.file("chain2.tsv");
    write_chain_tsv(again, chain);
    CHECK(read_file(path) == read_file(again));
}

TEST_CASE("chain tsv rejects malformed rows") {
    const TempDir dir;
    const std::string path = dir.file("bad.tsv");

    write_file(path, "iteration\tlambda\tjumps\tlog_lik\taccepted\tmove\n");
    CHECK_THROWS_AS((void)read_chain_tsv(path, 2), std::runtime_error);  // no records

    write_file(path, "iteration\tlambda\tjumps\tlog_lik\taccepted\tmove\n"
                     "1\t0.5\t0,0\t-1.5\t1\n");
    CHECK_THROWS_AS((void)read_chain_tsv(path, 2), std::runtime_error);

    write_file(path, "iteration\tlambda\tjumps\tlog_lik\taccepted\tmove\n"
                     "1\t0.5\t0,0,0\t-1.5\t1\tr\n");
    CHECK_THROWS_AS((void)read_chain_tsv(path, 2), std::runtime_error);

    write_file(path, "iteration\tlambda\tjumps\tlog_lik\taccepted\tmove\n"
                     "1\tzebra\t0,0\t-1.5\t1\tr\n");
    CHECK_THROWS_AS((void)read_chain_tsv(path, 2), std::runtime_error);

    CHECK_THROWS_AS((void)read_chain_tsv(dir.file("missing.tsv"), 2), std::runtime_error);
}

TEST_CASE("manifest json round-trips every field") {
    const TempDir dir;
    RunManifest m;
    m.command = "infer --tree t.nwk --seed 7";
    m.config.iterations = 123;
    m.config.burn_in_fraction = 0.25;
    m.config.particles = 17;
    m.config.discount = 0.625;
    m.config.seed = 7;
    m.config.normalize_branches = true;
    m.config.adaptive_resampling = true;
    m.config.threads = 2;
    m.rate_resolved = RateConfig::learned(2.5);
    m.tree_newick = "(A:1,B:2);";
    m.alphabet_size = 3;
    m.tree_path = "t.nwk";
    m.tree_hash = "cbf29ce484222325";
    m.data_path = "d.tsv";
    m.data_hash = "0000000000000001";
    m.rescaled_lengths = {0.5, 0.25};
    m.total_rescaled_length = 0.75;
    m.smc_calls = 99;
    m.noop_proposals = 3;
    m.runtime_seconds = 1.25;
    m.chains = 4;
    m.chain_index = 2;

    const std::string path = dir.file("manifest.json");
    write_manifest_json(path, m);
    const RunManifest r = read_manifest_json(path);

    CHECK(r.command == m.command);
    CHECK(r.config.iterations == m.config.iterations);
    CHECK(r.config.burn_in_fraction == m.config.burn_in_fraction);
    CHECK(r.config.particles == m.config.particles);
    CHECK(r.config.discount == m.config.discount);
    CHECK(r.config.seed == m.config.seed);
    CHECK(r.config.normalize_branches == m.config.normalize_branches);
    CHECK(r.config.adaptive_resampling == m.config.adaptive_resampling);
    CHECK(r.rate_resolved.mode == m.rate_resolved.mode);
    CHECK(r.rate_resolved.rho == m.rate_resolved.rho);
    CHECK(r.tree_newick == m.tree_newick);
    CHECK(r.alphabet_size == m.alphabet_size);
    CHECK(r.tree_hash == m.tree_hash);
    CHECK(r.data_hash == m.data_hash);
    CHECK(r.rescaled_lengths == m.rescaled_lengths);
    CHECK(r.total_rescaled_length == m.total_rescaled_length);
    CHECK(r.smc_calls == m.smc_calls);
    CHECK(r.noop_proposals == m.noop_proposals);
    CHECK(r.runtime_seconds == m.runtime_seconds);
    CHECK(r.chains == m.chains);
    CHECK(r.chain_index == m.chain_index);

    // Re-serialization is byte-stable.
    const std::string again = dir.file("manifest2.json");
    write_manifest_json(again, r);
    CHECK(read_file(path) == read_file(again));
}

TEST_CASE("truth json round-trips") {
    const TempDir dir;
    GroundTruth truth;
    truth.scheme = "nested";
    truth.leaves = 200;
    truth.tv = 0.25;
    truth.seed = 42;
    truth.jump_branches = {3, 17, 44};
    truth.node_group = {0, 0, 1, 1, 2};
    truth.group_probs = {0.125, 0.375, 0.625, 0.875};
    truth.emp_tv = {0.24, 0.26, 0.22};

    const std::string path = dir.file("truth.json");
    write_truth_json(path, truth);
    const GroundTruth r = read_truth_json(path);
    CHECK(r.scheme == truth.scheme);
    CHECK(r.leaves == truth.leaves);
    CHECK(r.tv == truth.tv);
    CHECK(r.seed == truth.seed);
    CHECK(r.jump_branches == truth.jump_branches);
    CHECK(r.node_group == truth.node_group);
    CHECK(r.group_probs == truth.group_probs);
    CHECK(r.emp_tv == truth.emp_tv);
}

TEST_CASE("summary json stringifies infinite bayes factors") {
    const TempDir dir;
    Summary s;
    s.branch_probabilities = {0.5, 1.0};
    s.coclustering = {1.0, 0.5, 0.5, 1.0};
    s.median.assignment.z = {0, 1};
    s.median.jumps = {0, 1};
    s.median.iteration = 3;
    s.median.score = 0.5;
    s.bayes_factor = kInf;
    s.log10_bayes_factor = kInf;
    s.ess_lambda = 12.5;
    s.ess_per_second = 100.0;
    s.runtime_seconds = 0.125;

    const std::string path = dir.file("summary.json");
    write_summary_json(path, s);
    const std::string text = read_file(path);
    CHECK(text.find("\"bayes_factor\": \"inf\"") != std::string::npos);
    CHECK(text.find("\"log10_bayes_factor\": \"inf\"") != std::string::npos);
    CHECK(text.find("\"median_jump_branches\"") != std::string::npos);
    CHECK(text.find("\"ess_lambda\": 12.5") != std::string::npos);
    CHECK(text.back() == '\n');
}

TEST_CASE("cocluster csv is plain rows") {
    const TempDir dir;
    const std::string path = dir.file("cc.csv");
    write_cocluster_csv(path, {1.0, 0.25, 0.25, 1.0}, 2);
    CHECK(read_file(path) == "1,0.25\n0.25,1\n");
    CHECK_THROWS_AS(write_cocluster_csv(path, {1.0, 0.5, 0.5}, 2), std::invalid_argument);
}

TEST_CASE("branch scores load from summaries and tsv") {
    const TempDir dir;
    Summary s;
    s.branch_probabilities = {0.5, 0.75, 0.0};
    s.coclustering = {1.0};
    s.median.assignment.z = {0};
    s.median.jumps = {0, 0, 0};
    s.median.iteration = 0;
    s.median.score = 0.0;
    s.bayes_factor = 1.0;
    s.log10_bayes_factor = 0.0;
    s.ess_lambda = 11.0;
    s.ess_per_second = 1.0;
    s.runtime_seconds = 1.0;
    const std::string json_path = dir.file("summary.json");
    write_summary_json(json_path, s);
    CHECK(read_branch_scores(json_path) == std::vector<double>{0.5, 0.75, 0.0});

    const std::string tsv_path = dir.file("scores.tsv");
    write_file(tsv_path, "branch\tscore\n2\t0.125\n0\t1\n1\t0.5\n");
    CHECK(read_branch_scores(tsv_path) == std::vector<double>{1.0, 0.5, 0.125});

    // Every branch must appear exactly once.
    write_file(tsv_path, "0\t0.5\n0\t0.25\n");
    CHECK_THROWS_AS((void)read_branch_scores(tsv_path), std::runtime_error);
    write_file(tsv_path, "0\t0.5\n2\t0.25\n");
    CHECK_THROWS_AS((void)read_branch_scores(tsv_path), std::runtime_error);
    CHECK_THROWS_AS((void)read_branch_scores(dir.file("nope.tsv")), std::runtime_error);
}

TEST_CASE("read_file reports the failing path") {
    try {
        (void)read_file("/nonexistent/phyjump/file.txt");
        CHECK(false);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("/nonexistent/phyjump/file.txt") !=
              std::string::npos);
    }
}

}  // TEST_SUITE
