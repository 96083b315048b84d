#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phyjump/pmcmc.hpp"
#include "phyjump/posterior.hpp"

namespace phyjump {

inline constexpr const char* kVersion = "0.1.0";

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t value);

/// Shortest decimal form that round-trips the exact double.
std::string format_double(double value);

/// chain.tsv: header, then one row per iteration:
/// iteration, lambda, comma-joined b, log p-hat, accepted, move.
void write_chain_tsv(const std::string& path, const Chain& chain);
std::vector<ChainRecord> read_chain_tsv(const std::string& path, int n_branches);

/// Everything needed to reproduce and re-summarize a run.
struct RunManifest {
    std::string command;
    McmcConfig config;
    RateConfig rate_resolved;
    std::string tree_newick;  // the parsed tree, re-serialized
    int alphabet_size = 2;
    std::string tree_path;
    std::string tree_hash;
    std::string data_path;
    std::string data_hash;
    std::vector<double> rescaled_lengths;
    double total_rescaled_length = 0.0;
    int smc_calls = 0;
    int noop_proposals = 0;
    double runtime_seconds = 0.0;
    int chains = 1;
    int chain_index = 0;
};

void write_manifest_json(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest_json(const std::string& path);

void write_summary_json(const std::string& path, const Summary& summary);
void write_cocluster_csv(const std::string& path, const std::vector<double>& matrix, int n);

struct GroundTruth {
    std::string scheme;
    int leaves = 0;
    double tv = 0.0;
    std::uint64_t seed = 0;
    std::vector<int> jump_branches;
    std::vector<int> node_group;
    std::vector<double> group_probs;
    std::vector<double> emp_tv;
};

void write_truth_json(const std::string& path, const GroundTruth& truth);
GroundTruth read_truth_json(const std::string& path);

/// Per-branch scores: *.json reads a Summary's branch_probabilities; anything
/// else is two-column TSV `branch<TAB>score` covering each branch once.
std::vector<double> read_branch_scores(const std::string& path);

}  // namespace phyjump
