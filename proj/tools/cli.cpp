// phyjump: detect distribution-changing jumps on a phylogeny.
//
// Subcommands: infer (PMCMC sampler), simulate (synthetic benchmark data),
// summarize (recompute summaries from a stored chain), eval (score inferred
// branch probabilities against ground truth).
//
// Exit codes: 0 success, 1 I/O or parse failure, 2 invalid configuration,
// 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "phyjump/io.hpp"
#include "phyjump/pmcmc.hpp"
#include "phyjump/posterior.hpp"
#include "phyjump/rng.hpp"
#include "phyjump/synth.hpp"
#include "phyjump/tree.hpp"

namespace fs = std::filesystem;
using namespace phyjump;

namespace {

std::string join_command(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += argv[i];
    }
    return out;
}

std::string join_branches(const JumpVector& jumps) {
    std::string out;
    for (std::size_t b = 0; b < jumps.size(); ++b) {
        if (jumps[b] > 0) {
            if (!out.empty()) {
                out += ',';
            }
            out += std::to_string(b);
        }
    }
    return out.empty() ? "none" : out;
}

std::string finite_or_inf(double value) {
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    return format_double(value);
}

void print_headline(const Summary& summary) {
    std::cout << "log10_bayes_factor\t" << finite_or_inf(summary.log10_bayes_factor) << '\n'
              << "median_jump_branches\t" << join_branches(summary.median.jumps) << '\n'
              << "ess_lambda\t" << format_double(summary.ess_lambda) << '\n'
              << "ess_per_second\t" << format_double(summary.ess_per_second) << '\n';
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) {
        throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
    }
}

struct InferArgs {
    std::string tree_path;
    std::string data_path;
    std::string out_dir;
    int iterations = 50000;
    double burn_in = 0.5;
    int particles = 100;
    double discount = 0.5;
    std::string rate_mode = "learned";
    double lambda = 1.0;
    double prior_mean_jumps = 1.0;
    std::uint64_t seed = 0;
    int chains = 1;
    int alphabet = 0;  // 0 = infer from the data
    bool normalize_branches = false;
    bool adaptive_resampling = false;
    int threads = 0;
    std::string command;
};

/// Chain outputs live in `dir`: chain.tsv, summary.json, cocluster.csv,
/// manifest.json.
Summary write_run_outputs(const std::string& dir, const Tree& tree, const Chain& chain,
                          RunManifest manifest) {
    ensure_dir(dir);
    const Summary summary = summarize(tree, chain);
    write_chain_tsv(dir + "/chain.tsv", chain);
    write_summary_json(dir + "/summary.json", summary);
    write_cocluster_csv(dir + "/cocluster.csv", summary.coclustering, tree.num_nodes());
    manifest.config = chain.config;
    manifest.rate_resolved = chain.rate;
    manifest.rescaled_lengths = chain.rescaled_lengths;
    manifest.total_rescaled_length = chain.total_rescaled_length;
    manifest.smc_calls = chain.smc_calls;
    manifest.noop_proposals = chain.noop_proposals;
    manifest.runtime_seconds = chain.runtime_seconds;
    write_manifest_json(dir + "/manifest.json", manifest);
    return summary;
}

int cmd_infer(const InferArgs& args) {
    if (args.chains < 1) {
        throw std::invalid_argument("--chains must be at least 1");
    }
    if (args.alphabet != 0 && args.alphabet < 2) {
        throw std::invalid_argument("--alphabet must be at least 2");
    }

    // Reject bad settings before touching the filesystem so a config error
    // is reported as one even when an input path is also wrong.
    McmcConfig config;
    config.iterations = args.iterations;
    config.burn_in_fraction = args.burn_in;
    config.particles = args.particles;
    config.discount = args.discount;
    config.rate = args.rate_mode == "fixed" ? RateConfig::fixed(args.lambda)
                                            : RateConfig::learned_mean_jumps(args.prior_mean_jumps);
    config.seed = args.seed;
    config.normalize_branches = args.normalize_branches;
    config.adaptive_resampling = args.adaptive_resampling;
    config.threads = args.threads;
    config.validate();

    const std::string tree_text = read_file(args.tree_path);
    const std::string data_text = read_file(args.data_path);
    Tree tree = parse_newick(tree_text);
    const auto records = parse_observation_tsv(data_text);

    int max_value = 1;
    for (const auto& [label, value] : records) {
        max_value = std::max(max_value, value);
    }
    tree.alphabet_size = args.alphabet != 0 ? args.alphabet : max_value + 1;
    attach_observations(tree, records);

    ensure_dir(args.out_dir);
    RunManifest base;
    base.command = args.command;
    base.tree_newick = serialize_newick(tree);
    base.alphabet_size = tree.alphabet_size;
    base.tree_path = args.tree_path;
    base.tree_hash = to_hex(fnv1a64(tree_text));
    base.data_path = args.data_path;
    base.data_hash = to_hex(fnv1a64(data_text));
    base.chains = args.chains;

    if (args.chains == 1) {
        const Chain chain = run(tree, config);
        const Summary summary = write_run_outputs(args.out_dir, tree, chain, base);
        print_headline(summary);
        return 0;
    }

    // Independent chains with derived seeds; each writes its own directory
    // and the pooled post-burn-in samples drive a combined summary.
    std::vector<Chain> chains(static_cast<std::size_t>(args.chains));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(args.chains));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(args.chains));
    for (int i = 0; i < args.chains; ++i) {
        McmcConfig chain_config = config;
        chain_config.seed = SplitMix64::keyed(args.seed, streams::chain,
                                              static_cast<std::uint64_t>(i))();
        workers.emplace_back([&, i, chain_config] {
            try {
                chains[static_cast<std::size_t>(i)] = run(tree, chain_config);
            } catch (...) {
                failures[static_cast<std::size_t>(i)] = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) {
        worker.join();
    }
    for (const auto& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    Chain pooled;
    for (int i = 0; i < args.chains; ++i) {
        const Chain& chain = chains[static_cast<std::size_t>(i)];
        std::ostringstream dir;
        dir << args.out_dir << "/chain_" << i + 1;
        RunManifest manifest = base;
        manifest.chain_index = i + 1;  // matches the chain_<k> directory name
        write_run_outputs(dir.str(), tree, chain, manifest);

        const auto tail = chain.post_burn_in();
        pooled.records.insert(pooled.records.end(), tail.begin(), tail.end());
        pooled.smc_calls += chain.smc_calls;
        pooled.noop_proposals += chain.noop_proposals;
        pooled.runtime_seconds += chain.runtime_seconds;
    }
    pooled.config = config;
    pooled.config.iterations = static_cast<int>(pooled.records.size());
    pooled.config.burn_in_fraction = 0.0;
    pooled.rate = chains[0].rate;
    pooled.rescaled_lengths = chains[0].rescaled_lengths;
    pooled.total_rescaled_length = chains[0].total_rescaled_length;

    const Summary summary = summarize(tree, pooled);
    write_summary_json(args.out_dir + "/summary.json", summary);
    write_cocluster_csv(args.out_dir + "/cocluster.csv", summary.coclustering, tree.num_nodes());

    // Root manifest records the invocation and the pooled totals; chain_index
    // 0 marks it as the aggregate.
    RunManifest root = base;
    root.config = config;
    root.rate_resolved = pooled.rate;
    root.rescaled_lengths = pooled.rescaled_lengths;
    root.total_rescaled_length = pooled.total_rescaled_length;
    root.smc_calls = pooled.smc_calls;
    root.noop_proposals = pooled.noop_proposals;
    root.runtime_seconds = pooled.runtime_seconds;
    write_manifest_json(args.out_dir + "/manifest.json", root);
    print_headline(summary);
    return 0;
}

struct SimulateArgs {
    std::string scheme = "two-group";
    int leaves = 100;
    double tv = 0.5;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    double window_lo = 0.1;
    double window_hi = 0.5;
    std::string length_law = "exponential";
    std::string topology = "remy";
};

int cmd_simulate(const SimulateArgs& args) {
    if (args.leaves < 2) {
        throw std::invalid_argument("--leaves must be at least 2");
    }
    const bool nested = args.scheme == "nested";
    SplitMix64 tree_rng = SplitMix64::keyed(args.seed, streams::tree);
    const Tree tree = random_binary_tree(args.leaves, tree_rng,
                                         args.length_law == "uniform"
                                             ? BranchLengthLaw::uniform_unit
                                             : BranchLengthLaw::exponential_unit,
                                         args.topology == "uniform-split"
                                             ? TopologyLaw::uniform_split
                                             : TopologyLaw::remy_uniform);

    SplitMix64 place_rng = SplitMix64::keyed(args.seed, streams::generate);
    const std::vector<int> jump_branches =
        place_jumps(tree, args.window_lo, args.window_hi, nested ? 3 : 1, nested, place_rng);

    SplitMix64 data_rng = SplitMix64::keyed(args.seed, streams::data);
    const SyntheticDataset dataset = simulate_dataset(
        tree, jump_branches, args.tv, nested ? Scheme::nested : Scheme::two_group, data_rng);

    ensure_dir(args.out_dir);
    write_file(args.out_dir + "/tree.nwk", serialize_newick(tree) + "\n");
    std::string tsv = "label\tvalue\n";
    for (const auto& [label, value] : dataset.records) {
        tsv += label;
        tsv += '\t';
        tsv += std::to_string(value);
        tsv += '\n';
    }
    write_file(args.out_dir + "/data.tsv", tsv);

    GroundTruth truth;
    truth.scheme = args.scheme;
    truth.leaves = args.leaves;
    truth.tv = args.tv;
    truth.seed = args.seed;
    truth.jump_branches = jump_branches;
    truth.node_group = dataset.node_group;
    truth.group_probs = dataset.group_probs;
    truth.emp_tv = dataset.emp_tv;
    write_truth_json(args.out_dir + "/truth.json", truth);

    std::cout << "tree\t" << args.out_dir << "/tree.nwk\n"
              << "data\t" << args.out_dir << "/data.tsv\n"
              << "truth\t" << args.out_dir << "/truth.json\n"
              << "jump_branches\t" << join_branches([&] {
                     JumpVector indicator(static_cast<std::size_t>(tree.num_branches()), 0);
                     for (int b : jump_branches) {
                         indicator[static_cast<std::size_t>(b)] = 1;
                     }
                     return indicator;
                 }())
              << '\n';
    return 0;
}

struct SummarizeArgs {
    std::string run_dir;
    double burn_in = -1.0;  // < 0 = keep the manifest's fraction
    std::string out_path;   // empty = <run>/summary.json
};

int cmd_summarize(const SummarizeArgs& args) {
    const RunManifest manifest = read_manifest_json(args.run_dir + "/manifest.json");
    Tree tree = parse_newick(manifest.tree_newick);
    tree.alphabet_size = manifest.alphabet_size;

    Chain chain;
    chain.records =
        read_chain_tsv(args.run_dir + "/chain.tsv", static_cast<int>(manifest.rescaled_lengths.size()));
    chain.config = manifest.config;
    if (args.burn_in >= 0.0) {
        if (args.burn_in >= 1.0) {
            throw std::invalid_argument("--burnin must lie in [0, 1)");
        }
        chain.config.burn_in_fraction = args.burn_in;
    }
    chain.rate = manifest.rate_resolved;
    chain.rescaled_lengths = manifest.rescaled_lengths;
    chain.total_rescaled_length = manifest.total_rescaled_length;
    chain.smc_calls = manifest.smc_calls;
    chain.noop_proposals = manifest.noop_proposals;
    chain.runtime_seconds = manifest.runtime_seconds;

    const Summary summary = summarize(tree, chain);
    const std::string out =
        args.out_path.empty() ? args.run_dir + "/summary.json" : args.out_path;
    write_summary_json(out, summary);
    print_headline(summary);
    return 0;
}

struct EvalArgs {
    std::string run_dir;
    std::string truth_path;
    std::vector<std::string> score_paths;
    std::string out_dir;  // empty = run dir
};

int cmd_eval(const EvalArgs& args) {
    const GroundTruth truth = read_truth_json(args.truth_path);
    const int n_branches = static_cast<int>(truth.node_group.size()) - 1;
    std::vector<char> positives(static_cast<std::size_t>(n_branches), 0);
    for (int b : truth.jump_branches) {
        if (b < 0 || b >= n_branches) {
            throw std::invalid_argument("truth jump branch " + std::to_string(b) +
                                        " out of range");
        }
        positives[static_cast<std::size_t>(b)] = 1;
    }

    std::vector<std::pair<std::string, std::vector<double>>> methods;
    methods.emplace_back("model", read_branch_scores(args.run_dir + "/summary.json"));
    for (const auto& path : args.score_paths) {
        methods.emplace_back(fs::path(path).stem().string(), read_branch_scores(path));
    }
    for (const auto& [name, scores] : methods) {
        if (static_cast<int>(scores.size()) != n_branches) {
            throw std::invalid_argument("method " + name + " scores " +
                                        std::to_string(scores.size()) + " branches, truth has " +
                                        std::to_string(n_branches));
        }
    }

    // Model-specific fields come from the stored summary.
    const auto summary_json =
        nlohmann::json::parse(read_file(args.run_dir + "/summary.json"));
    const auto median_branches =
        summary_json.at("median_jump_branches").get<std::vector<int>>();
    const std::string log10_k = summary_json.at("log10_bayes_factor").is_string()
                                    ? summary_json.at("log10_bayes_factor").get<std::string>()
                                    : format_double(summary_json.at("log10_bayes_factor").get<double>());
    JumpVector median_indicator(static_cast<std::size_t>(n_branches), 0);
    for (int b : median_branches) {
        median_indicator[static_cast<std::size_t>(b)] = 1;
    }
    const bool identified = target_identified(median_indicator, truth.jump_branches);
    const double mean_emp_tv =
        truth.emp_tv.empty()
            ? 0.0
            : std::accumulate(truth.emp_tv.begin(), truth.emp_tv.end(), 0.0) /
                  static_cast<double>(truth.emp_tv.size());

    const std::string out_dir = args.out_dir.empty() ? args.run_dir : args.out_dir;
    ensure_dir(out_dir);
    std::string roc_csv = "method,fpr,tpr\n";
    std::string eval_csv = "method,tv,emp_tv,target_identified,log10_k,auc\n";
    for (const auto& [name, scores] : methods) {
        const RocResult roc = roc_auc(scores, positives);
        for (const auto& [fpr, tpr] : roc.points) {
            roc_csv += name;
            roc_csv += ',';
            roc_csv += format_double(fpr);
            roc_csv += ',';
            roc_csv += format_double(tpr);
            roc_csv += '\n';
        }
        eval_csv += name;
        eval_csv += ',';
        eval_csv += format_double(truth.tv);
        eval_csv += ',';
        eval_csv += format_double(mean_emp_tv);
        eval_csv += ',';
        eval_csv += name == "model" ? (identified ? "1" : "0") : "";
        eval_csv += ',';
        eval_csv += name == "model" ? log10_k : "";
        eval_csv += ',';
        eval_csv += format_double(roc.auc);
        eval_csv += '\n';
        std::cout << "auc\t" << name << '\t' << format_double(roc.auc) << '\n';
    }
    std::cout << "target_identified\t" << (identified ? 1 : 0) << '\n'
              << "log10_bayes_factor\t" << log10_k << '\n';
    write_file(out_dir + "/roc.csv", roc_csv);
    write_file(out_dir + "/eval.csv", eval_csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jump detection for evolving phenotypic distributions on a tree"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("phyjump ") + kVersion);

    InferArgs infer;
    infer.command = join_command(argc, argv);
    auto* infer_cmd = app.add_subcommand("infer", "Sample the jump posterior for a dataset");
    infer_cmd->add_option("--tree", infer.tree_path, "Newick tree file")->required();
    infer_cmd->add_option("--data", infer.data_path, "label<TAB>value observation file")->required();
    infer_cmd->add_option("--out", infer.out_dir, "output directory")->required();
    infer_cmd->add_option("--iters", infer.iterations, "MCMC iterations");
    infer_cmd->add_option("--burnin", infer.burn_in, "burn-in fraction");
    infer_cmd->add_option("--particles", infer.particles, "SMC particles per likelihood estimate");
    infer_cmd->add_option("--discount", infer.discount, "Pitman-Yor discount d");
    infer_cmd->add_option("--rate-mode", infer.rate_mode, "jump rate: learned or fixed")
        ->check(CLI::IsMember({"learned", "fixed"}));
    infer_cmd->add_option("--lambda", infer.lambda, "jump rate (fixed mode)");
    infer_cmd->add_option("--prior-mean-jumps", infer.prior_mean_jumps,
                          "prior mean total jump count (learned mode)");
    infer_cmd->add_option("--seed", infer.seed, "random seed (required for reproducibility)")
        ->required();
    infer_cmd->add_option("--chains", infer.chains, "independent chains with derived seeds");
    infer_cmd->add_option("--alphabet", infer.alphabet, "alphabet size (default: from data)");
    infer_cmd->add_flag("--normalize-branches", infer.normalize_branches,
                        "scale rescaled branch lengths to mean 1");
    infer_cmd->add_flag("--adaptive-resampling", infer.adaptive_resampling,
                        "resample only when particle ESS drops below half");
    infer_cmd->add_option("--threads", infer.threads, "SMC threads (0 = library default)");

    SimulateArgs simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic benchmark instance");
    sim_cmd->add_option("--scheme", simulate.scheme, "two-group or nested")
        ->check(CLI::IsMember({"two-group", "nested"}));
    sim_cmd->add_option("--leaves", simulate.leaves, "number of leaves");
    sim_cmd->add_option("--tv", simulate.tv, "total variation between adjacent groups");
    sim_cmd->add_option("--seed", simulate.seed, "random seed")->required();
    sim_cmd->add_option("--out", simulate.out_dir, "output directory");
    sim_cmd->add_option("--window-lo", simulate.window_lo, "min subtree leaf fraction");
    sim_cmd->add_option("--window-hi", simulate.window_hi, "max subtree leaf fraction");
    sim_cmd->add_option("--length-law", simulate.length_law, "branch lengths: exponential or uniform")
        ->check(CLI::IsMember({"exponential", "uniform"}));
    sim_cmd->add_option("--topology", simulate.topology, "tree topology law: remy or uniform-split")
        ->check(CLI::IsMember({"remy", "uniform-split"}));

    SummarizeArgs summarize_args;
    auto* sum_cmd = app.add_subcommand("summarize", "Recompute summaries from a stored chain");
    sum_cmd->add_option("--run", summarize_args.run_dir, "directory written by infer")->required();
    sum_cmd->add_option("--burnin", summarize_args.burn_in, "override the burn-in fraction");
    sum_cmd->add_option("--out", summarize_args.out_path, "summary output path");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score branch probabilities against ground truth");
    eval_cmd->add_option("--run", eval.run_dir, "directory written by infer")->required();
    eval_cmd->add_option("--truth", eval.truth_path, "truth.json from simulate")->required();
    eval_cmd->add_option("--scores", eval.score_paths,
                         "extra per-branch score files (branch<TAB>score)");
    eval_cmd->add_option("--out", eval.out_dir, "output directory (default: run dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (infer_cmd->parsed()) {
            return cmd_infer(infer);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(simulate);
        }
        if (sum_cmd->parsed()) {
            return cmd_summarize(summarize_args);
        }
        return cmd_eval(eval);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
