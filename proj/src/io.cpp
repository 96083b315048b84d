#include "phyjump/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace phyjump {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in.good() && !in.eof()) {
        throw std::runtime_error("failed reading '" + path + "'");
    }
    return std::move(buffer).str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << content;
    if (!out.good()) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h = (h ^ c) * 1099511628211ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw std::runtime_error("double formatting failed");
    }
    return std::string(buf, ptr);
}

namespace {

double parse_double(std::string_view text, const std::string& what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::runtime_error("corrupt " + what + ": bad number '" + std::string(text) +
                                 "'");
    }
    return value;
}

long parse_long(std::string_view text, const std::string& what) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::runtime_error("corrupt " + what + ": bad integer '" + std::string(text) +
                                 "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

void write_chain_tsv(const std::string& path, const Chain& chain) {
    std::string out = "iteration\tlambda\tjumps\tlog_lik\taccepted\tmove\n";
    out.reserve(chain.records.size() * 48);
    for (std::size_t i = 0; i < chain.records.size(); ++i) {
        const ChainRecord& r = chain.records[i];
        out += std::to_string(i + 1);
        out += '\t';
        out += format_double(r.lambda);
        out += '\t';
        for (std::size_t j = 0; j < r.jumps.size(); ++j) {
            if (j > 0) {
                out += ',';
            }
            out += std::to_string(r.jumps[j]);
        }
        out += '\t';
        out += format_double(r.log_likelihood);
        out += '\t';
        out += r.accepted ? '1' : '0';
        out += '\t';
        out += r.move;
        out += '\n';
    }
    write_file(path, out);
}

std::vector<ChainRecord> read_chain_tsv(const std::string& path, int n_branches) {
    const std::string text = read_file(path);
    std::vector<ChainRecord> records;
    std::size_t line_start = 0;
    std::size_t line_number = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        const bool terminated = line_end != std::string::npos;
        if (!terminated) {
            line_end = text.size();
        }
        const std::string_view line(text.data() + line_start, line_end - line_start);
        line_start = line_end + 1;
        ++line_number;
        if (line_number == 1) {
            if (line != "iteration\tlambda\tjumps\tlog_lik\taccepted\tmove") {
                throw std::runtime_error("corrupt chain file: bad header");
            }
            continue;
        }
        if (!terminated) {
            throw std::runtime_error("corrupt chain file: truncated final line");
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 6) {
            throw std::runtime_error("corrupt chain file: line " + std::to_string(line_number) +
                                     " has " + std::to_string(fields.size()) + " fields");
        }
        if (parse_long(fields[0], "chain file") != static_cast<long>(records.size()) + 1) {
            throw std::runtime_error("corrupt chain file: iteration numbering broken at line " +
                                     std::to_string(line_number));
        }
        ChainRecord record;
        record.lambda = parse_double(fields[1], "chain file");
        if (!fields[2].empty()) {
            for (std::string_view token : split(fields[2], ',')) {
                record.jumps.push_back(static_cast<int>(parse_long(token, "chain file")));
            }
        }
        if (static_cast<int>(record.jumps.size()) != n_branches) {
            throw std::runtime_error("corrupt chain file: expected " +
                                     std::to_string(n_branches) + " jump counts at line " +
                                     std::to_string(line_number));
        }
        record.log_likelihood = fields[3] == "-inf"
                                    ? -std::numeric_limits<double>::infinity()
                                    : parse_double(fields[3], "chain file");
        if (fields[4] != "0" && fields[4] != "1") {
            throw std::runtime_error("corrupt chain file: bad accepted flag at line " +
                                     std::to_string(line_number));
        }
        record.accepted = fields[4] == "1";
        if (fields[5].size() != 1) {
            throw std::runtime_error("corrupt chain file: bad move at line " +
                                     std::to_string(line_number));
        }
        record.move = fields[5][0];
        records.push_back(std::move(record));
    }
    if (records.empty()) {
        throw std::runtime_error("corrupt chain file: no records");
    }
    return records;
}

namespace {

ordered_json rate_to_json(const RateConfig& rate) {
    return ordered_json{
        {"mode", rate.mode == RateConfig::Mode::fixed ? "fixed" : "learned"},
        {"lambda", rate.lambda},
        {"rho", rate.rho},
        {"prior_mean_jumps", rate.prior_mean_jumps},
    };
}

RateConfig rate_from_json(const ordered_json& j) {
    RateConfig rate;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "fixed") {
        rate.mode = RateConfig::Mode::fixed;
    } else if (mode == "learned") {
        rate.mode = RateConfig::Mode::learned;
    } else {
        throw std::runtime_error("corrupt manifest: bad rate mode '" + mode + "'");
    }
    rate.lambda = j.at("lambda").get<double>();
    rate.rho = j.at("rho").get<double>();
    rate.prior_mean_jumps = j.at("prior_mean_jumps").get<double>();
    return rate;
}

}  // namespace

void write_manifest_json(const std::string& path, const RunManifest& manifest) {
    ordered_json j{
        {"version", kVersion},
        {"command", manifest.command},
        {"config",
         {
             {"iterations", manifest.config.iterations},
             {"burn_in_fraction", manifest.config.burn_in_fraction},
             {"particles", manifest.config.particles},
             {"discount", manifest.config.discount},
             {"seed", manifest.config.seed},
             {"normalize_branches", manifest.config.normalize_branches},
             {"adaptive_resampling", manifest.config.adaptive_resampling},
             {"threads", manifest.config.threads},
         }},
        {"rate", rate_to_json(manifest.config.rate)},
        {"rate_resolved", rate_to_json(manifest.rate_resolved)},
        {"inputs",
         {
             {"tree_path", manifest.tree_path},
             {"tree_hash", manifest.tree_hash},
             {"data_path", manifest.data_path},
             {"data_hash", manifest.data_hash},
         }},
        {"tree_newick", manifest.tree_newick},
        {"alphabet_size", manifest.alphabet_size},
        {"rescaled_lengths", manifest.rescaled_lengths},
        {"total_rescaled_length", manifest.total_rescaled_length},
        {"chains", manifest.chains},
        {"chain_index", manifest.chain_index},
        {"stats",
         {
             {"smc_calls", manifest.smc_calls},
             {"noop_proposals", manifest.noop_proposals},
             {"runtime_seconds", manifest.runtime_seconds},
         }},
    };
    write_file(path, j.dump(2) + "\n");
}

RunManifest read_manifest_json(const std::string& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt manifest '" + path + "': " + e.what());
    }
    try {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        const auto& c = j.at("config");
        m.config.iterations = c.at("iterations").get<int>();
        m.config.burn_in_fraction = c.at("burn_in_fraction").get<double>();
        m.config.particles = c.at("particles").get<int>();
        m.config.discount = c.at("discount").get<double>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.normalize_branches = c.at("normalize_branches").get<bool>();
        m.config.adaptive_resampling = c.at("adaptive_resampling").get<bool>();
        m.config.threads = c.at("threads").get<int>();
        m.config.rate = rate_from_json(j.at("rate"));
        m.rate_resolved = rate_from_json(j.at("rate_resolved"));
        const auto& in = j.at("inputs");
        m.tree_path = in.at("tree_path").get<std::string>();
        m.tree_hash = in.at("tree_hash").get<std::string>();
        m.data_path = in.at("data_path").get<std::string>();
        m.data_hash = in.at("data_hash").get<std::string>();
        m.tree_newick = j.at("tree_newick").get<std::string>();
        m.alphabet_size = j.at("alphabet_size").get<int>();
        m.rescaled_lengths = j.at("rescaled_lengths").get<std::vector<double>>();
        m.total_rescaled_length = j.at("total_rescaled_length").get<double>();
        m.chains = j.at("chains").get<int>();
        m.chain_index = j.at("chain_index").get<int>();
        const auto& stats = j.at("stats");
        m.smc_calls = stats.at("smc_calls").get<int>();
        m.noop_proposals = stats.at("noop_proposals").get<int>();
        m.runtime_seconds = stats.at("runtime_seconds").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt manifest '" + path + "': " + e.what());
    }
}

namespace {

// JSON has no literal infinities; the summary stores them as strings.
ordered_json finite_or_string(double value) {
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    return value;
}

}  // namespace

void write_summary_json(const std::string& path, const Summary& summary) {
    std::vector<int> median_branches;
    for (std::size_t i = 0; i < summary.median.jumps.size(); ++i) {
        if (summary.median.jumps[i] >= 1) {
            median_branches.push_back(static_cast<int>(i));
        }
    }
    ordered_json j{
        {"branch_probabilities", summary.branch_probabilities},
        {"median_jump_branches", median_branches},
        {"median_jumps", summary.median.jumps},
        {"median_iteration", summary.median.iteration},
        {"bayes_factor", finite_or_string(summary.bayes_factor)},
        {"log10_bayes_factor", finite_or_string(summary.log10_bayes_factor)},
        {"ess_lambda", summary.ess_lambda},
        {"ess_per_second", summary.ess_per_second},
        {"runtime_seconds", summary.runtime_seconds},
    };
    write_file(path, j.dump(2) + "\n");
}

void write_cocluster_csv(const std::string& path, const std::vector<double>& matrix, int n) {
    if (matrix.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        throw std::invalid_argument("co-clustering matrix size mismatch");
    }
    std::string out;
    out.reserve(matrix.size() * 8);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j > 0) {
                out += ',';
            }
            out += format_double(matrix[static_cast<std::size_t>(i) *
                                        static_cast<std::size_t>(n) +
                                        static_cast<std::size_t>(j)]);
        }
        out += '\n';
    }
    write_file(path, out);
}

void write_truth_json(const std::string& path, const GroundTruth& truth) {
    ordered_json j{
        {"scheme", truth.scheme},
        {"leaves", truth.leaves},
        {"tv", truth.tv},
        {"seed", truth.seed},
        {"jump_branches", truth.jump_branches},
        {"node_group", truth.node_group},
        {"group_probs", truth.group_probs},
        {"emp_tv", truth.emp_tv},
    };
    write_file(path, j.dump(2) + "\n");
}

GroundTruth read_truth_json(const std::string& path) {
    try {
        const ordered_json j = ordered_json::parse(read_file(path));
        GroundTruth t;
        t.scheme = j.at("scheme").get<std::string>();
        t.leaves = j.at("leaves").get<int>();
        t.tv = j.at("tv").get<double>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.jump_branches = j.at("jump_branches").get<std::vector<int>>();
        t.node_group = j.at("node_group").get<std::vector<int>>();
        t.group_probs = j.at("group_probs").get<std::vector<double>>();
        t.emp_tv = j.at("emp_tv").get<std::vector<double>>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt ground truth '" + path + "': " + e.what());
    }
}

std::vector<double> read_branch_scores(const std::string& path) {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        try {
            const ordered_json j = ordered_json::parse(read_file(path));
            return j.at("branch_probabilities").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("corrupt score file '" + path + "': " + e.what());
        }
    }
    const std::string text = read_file(path);
    std::vector<std::pair<int, double>> entries;
    std::size_t line_start = 0;
    std::size_t line_number = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) {
            line_end = text.size();
        }
        std::string_view line(text.data() + line_start, line_end - line_start);
        line_start = line_end + 1;
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 2) {
            throw std::runtime_error("score file '" + path + "' line " +
                                     std::to_string(line_number) + ": expected two columns");
        }
        int branch = 0;
        const auto [ptr, ec] =
            std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), branch);
        if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
            if (line_number == 1) {
                continue;  // header
            }
            throw std::runtime_error("score file '" + path + "' line " +
                                     std::to_string(line_number) + ": bad branch id");
        }
        entries.emplace_back(branch, parse_double(fields[1], "score file '" + path + "'"));
    }
    if (entries.empty()) {
        throw std::runtime_error("score file '" + path + "' has no rows");
    }
    std::vector<double> scores(entries.size(),
                               std::numeric_limits<double>::quiet_NaN());
    for (const auto& [branch, score] : entries) {
        if (branch < 0 || branch >= static_cast<int>(scores.size()) ||
            !std::isnan(scores[static_cast<std::size_t>(branch)])) {
            throw std::runtime_error("score file '" + path +
                                     "' must cover each branch id 0.." +
                                     std::to_string(scores.size() - 1) + " exactly once");
        }
        scores[static_cast<std::size_t>(branch)] = score;
    }
    return scores;
}

}  // namespace phyjump
