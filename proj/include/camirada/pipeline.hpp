#pragma once

// End-to-end microRNA ranking: consensus targets, the disease / DEG / TF
// evidence channels with permutation p-values, combination, ranking and
// optional ROC evaluation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "camirada/coexpr.hpp"
#include "camirada/detail/parallel.hpp"
#include "camirada/detail/text.hpp"
#include "camirada/enrich.hpp"
#include "camirada/error.hpp"
#include "camirada/evalroc.hpp"
#include "camirada/netcore.hpp"
#include "camirada/nullmodel.hpp"
#include "camirada/pcombine.hpp"
#include "camirada/propagate.hpp"

namespace camirada {

/// Failure of a whole pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

inline const std::vector<std::string>& channel_names() {
    static const std::vector<std::string> names = {"disease", "deg", "tf"};
    return names;
}

/// Every tunable of a run. Serialized as flat `key = value` text.
struct RunConfig {
    double beta = 0.5;
    double restart = 0.7;
    double tol = 1e-10;
    int max_iter = 1000;
    int permutations = 1000;
    int swap_factor = 10;
    CombineMethod combine_method = CombineMethod::sumlog;
    int wilkinson_r = 1;
    EsMode es_mode = EsMode::balanced;
    Es2Weights es2_weights = Es2Weights::reference;
    int topk = 10000;
    std::vector<int> powers = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    double fit_cut = 0.85;
    double min_weight = 0.01;
    double p_cut = 0.05;
    double fold_cut = 0.1;
    std::uint64_t base_seed = 20190101;
    int min_support = 3; ///< tools that must agree on a target
    int min_targets = 3; ///< microRNAs with fewer consensus targets are dropped
    std::vector<std::string> channels = {"disease", "deg", "tf"};
    bool share_rewiring = true;  ///< one rewired network per permutation, shared by all microRNAs
    bool include_tf_seeds = false; ///< add TFs to the subnetwork-extraction seeds
    std::vector<std::size_t> top_ns = {65, 130, 260};
    unsigned threads = 0; ///< 0 = hardware concurrency; never affects results

    RwrParams rwr() const { return {restart, tol, max_iter}; }

    ScoreParams score() const { return {beta, rwr(), es_mode, es2_weights}; }

    bool channel_enabled(const std::string& name) const {
        return std::find(channels.begin(), channels.end(), name) != channels.end();
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw DomainError("config: " + m); };
        if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
        if (!(restart > 0.0 && restart <= 1.0)) fail("restart must lie in (0, 1]");
        if (!(tol > 0.0)) fail("tol must be positive");
        if (max_iter < 1) fail("max_iter must be positive");
        if (permutations < 1) fail("permutations must be positive");
        if (swap_factor < 1) fail("swap_factor must be positive");
        if (wilkinson_r < 1) fail("wilkinson_r must be positive");
        if (topk < 1) fail("topk must be positive");
        if (powers.empty()) fail("powers must not be empty");
        for (int p : powers)
            if (p < 1) fail("powers must be positive");
        if (!(fit_cut >= 0.0 && fit_cut < 1.0)) fail("fit_cut must lie in [0, 1)");
        if (!(min_weight >= 0.0)) fail("min_weight must be >= 0");
        if (!(p_cut > 0.0 && p_cut <= 1.0)) fail("p_cut must lie in (0, 1]");
        if (!(fold_cut >= 0.0)) fail("fold_cut must be >= 0");
        if (min_support < 1) fail("min_support must be positive");
        if (min_targets < 1) fail("min_targets must be positive");
        if (channels.empty()) fail("at least one channel must be enabled");
        for (const auto& c : channels)
            if (std::find(channel_names().begin(), channel_names().end(), c) == channel_names().end())
                fail("unknown channel '" + c + "'");
    }
};

namespace detail {

inline std::vector<int> parse_powers(std::string_view s) {
    std::vector<int> out;
    for (auto part : split(s, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        const auto dots = part.find("..");
        if (dots != std::string_view::npos) {
            const auto lo = parse_int<int>(part.substr(0, dots));
            const auto hi = parse_int<int>(part.substr(dots + 2));
            if (!lo || !hi || *lo > *hi) throw DomainError("invalid power range '" + std::string(part) + "'");
            for (int p = *lo; p <= *hi; ++p) out.push_back(p);
        } else {
            const auto v = parse_int<int>(part);
            if (!v) throw DomainError("invalid power '" + std::string(part) + "'");
            out.push_back(*v);
        }
    }
    return out;
}

inline std::string join_powers(const std::vector<int>& ps) {
    // Contiguous ascending lists are written as a range.
    bool contiguous = ps.size() > 1;
    for (std::size_t i = 1; i < ps.size(); ++i) contiguous = contiguous && ps[i] == ps[i - 1] + 1;
    if (contiguous) return std::to_string(ps.front()) + ".." + std::to_string(ps.back());
    std::string out;
    for (std::size_t i = 0; i < ps.size(); ++i) out += (i ? "," : "") + std::to_string(ps[i]);
    return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
    return os.str();
}

inline bool parse_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw DomainError("invalid boolean '" + std::string(s) + "'");
}

} // namespace detail

/// Sets one config key from its text form; unknown keys are errors.
inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    key = detail::trim(key);
    value = detail::trim(value);
    auto as_double = [&] {
        const auto v = detail::parse_double(value);
        if (!v) throw DomainError("config: '" + std::string(key) + "' expects a number");
        return *v;
    };
    auto as_int = [&] {
        const auto v = detail::parse_int<long long>(value);
        if (!v) throw DomainError("config: '" + std::string(key) + "' expects an integer");
        return static_cast<int>(*v);
    };
    if (key == "beta") cfg.beta = as_double();
    else if (key == "restart") cfg.restart = as_double();
    else if (key == "tol") cfg.tol = as_double();
    else if (key == "max_iter") cfg.max_iter = as_int();
    else if (key == "permutations") cfg.permutations = as_int();
    else if (key == "swap_factor") cfg.swap_factor = as_int();
    else if (key == "combine_method") cfg.combine_method = parse_combine_method(value);
    else if (key == "wilkinson_r") cfg.wilkinson_r = as_int();
    else if (key == "es_mode") cfg.es_mode = parse_es_mode(value);
    else if (key == "es2_weights") cfg.es2_weights = parse_es2_weights(value);
    else if (key == "topk") cfg.topk = as_int();
    else if (key == "powers") cfg.powers = detail::parse_powers(value);
    else if (key == "fit_cut") cfg.fit_cut = as_double();
    else if (key == "min_weight") cfg.min_weight = as_double();
    else if (key == "p_cut") cfg.p_cut = as_double();
    else if (key == "fold_cut") cfg.fold_cut = as_double();
    else if (key == "base_seed") {
        const auto v = detail::parse_int<std::uint64_t>(value);
        if (!v) throw DomainError("config: 'base_seed' expects an unsigned integer");
        cfg.base_seed = *v;
    } else if (key == "min_support") cfg.min_support = as_int();
    else if (key == "min_targets") cfg.min_targets = as_int();
    else if (key == "channels") {
        cfg.channels.clear();
        for (auto c : detail::split(value, ','))
            if (!detail::trim(c).empty()) cfg.channels.emplace_back(detail::trim(c));
    } else if (key == "share_rewiring") cfg.share_rewiring = detail::parse_bool(value);
    else if (key == "include_tf_seeds") cfg.include_tf_seeds = detail::parse_bool(value);
    else if (key == "top_ns") {
        cfg.top_ns.clear();
        for (auto c : detail::split(value, ',')) {
            if (detail::trim(c).empty()) continue;
            const auto v = detail::parse_int<std::size_t>(c);
            if (!v || *v == 0) throw DomainError("config: invalid top_ns entry '" + std::string(c) + "'");
            cfg.top_ns.push_back(*v);
        }
    } else if (key == "threads") cfg.threads = static_cast<unsigned>(as_int());
    else throw DomainError("config: unknown key '" + std::string(key) + "'");
}

/// `key = value` lines; '#' starts a comment line.
inline RunConfig read_config(std::istream& in, RunConfig cfg = {}, const std::string& source = "<stream>") {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
        try {
            set_config_value(cfg, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
        } catch (const DomainError& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path, RunConfig cfg = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    return read_config(in, std::move(cfg), path);
}

inline void write_config(const RunConfig& cfg, std::ostream& out) {
    using detail::format_exact;
    out << "beta = " << format_exact(cfg.beta) << '\n'
        << "restart = " << format_exact(cfg.restart) << '\n'
        << "tol = " << format_exact(cfg.tol) << '\n'
        << "max_iter = " << cfg.max_iter << '\n'
        << "permutations = " << cfg.permutations << '\n'
        << "swap_factor = " << cfg.swap_factor << '\n'
        << "combine_method = " << to_string(cfg.combine_method) << '\n'
        << "wilkinson_r = " << cfg.wilkinson_r << '\n'
        << "es_mode = " << to_string(cfg.es_mode) << '\n'
        << "es2_weights = " << to_string(cfg.es2_weights) << '\n'
        << "topk = " << cfg.topk << '\n'
        << "powers = " << detail::join_powers(cfg.powers) << '\n'
        << "fit_cut = " << format_exact(cfg.fit_cut) << '\n'
        << "min_weight = " << format_exact(cfg.min_weight) << '\n'
        << "p_cut = " << format_exact(cfg.p_cut) << '\n'
        << "fold_cut = " << format_exact(cfg.fold_cut) << '\n'
        << "base_seed = " << cfg.base_seed << '\n'
        << "min_support = " << cfg.min_support << '\n'
        << "min_targets = " << cfg.min_targets << '\n'
        << "channels = " << detail::join(cfg.channels) << '\n'
        << "share_rewiring = " << (cfg.share_rewiring ? "true" : "false") << '\n'
        << "include_tf_seeds = " << (cfg.include_tf_seeds ? "true" : "false") << '\n'
        << "top_ns = " << detail::join(cfg.top_ns) << '\n'
        << "threads = " << cfg.threads << '\n';
}

/// FNV-1a over the parts followed by a splitmix64 finaliser. Independent of
/// platform, thread count and processing order.
inline std::uint64_t stable_seed(std::uint64_t base_seed, std::string_view channel, std::string_view mirna,
                                 std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_byte = [&h](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    auto mix_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(v >> (8 * i)));
    };
    auto mix_str = [&](std::string_view s) {
        for (const char c : s) mix_byte(static_cast<unsigned char>(c));
        mix_byte(0);
    };
    mix_u64(base_seed);
    mix_str(channel);
    mix_str(mirna);
    mix_u64(index);
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

// ---------------------------------------------------------------------------
// Target ingestion

/// One prediction tool's microRNA -> target genes table.
struct ToolTargets {
    std::string tool;
    std::map<std::string, std::set<GeneId>> targets;
};

/// `mirna<TAB>gene` lines; '#' comments skipped.
inline ToolTargets read_tool_targets(std::istream& in, std::string tool, const std::string& source = "<stream>") {
    ToolTargets t{std::move(tool), {}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto cols = detail::split_tsv(line);
        if (cols.size() != 2) throw ParseError(source, lineno, "expected 'mirna<TAB>gene'");
        const auto mirna = detail::trim(cols[0]);
        const auto gene = detail::trim(cols[1]);
        if (mirna.empty() || gene.empty() || detail::has_whitespace(mirna) || detail::has_whitespace(gene))
            throw ParseError(source, lineno, "invalid identifier");
        t.targets[std::string(mirna)].emplace(gene);
    }
    return t;
}

inline ToolTargets load_tool_targets(const std::string& path, std::string tool) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open target file: " + path);
    return read_tool_targets(in, std::move(tool), path);
}

struct ConsensusTargets {
    std::map<std::string, GeneSet> targets;
    std::vector<std::string> dropped; ///< microRNAs left with fewer than min_targets genes
};

/// Keeps targets reported by at least `min_support` tools, then drops
/// microRNAs with fewer than `min_targets` surviving targets.
inline ConsensusTargets consensus_targets(std::span<const ToolTargets> tools, int min_support, int min_targets = 3) {
    if (min_support < 1) throw DomainError("consensus_targets: min_support must be positive");
    if (tools.size() < static_cast<std::size_t>(min_support))
        throw DomainError("consensus_targets: " + std::to_string(tools.size()) + " tool lists for min_support " +
                          std::to_string(min_support));
    std::map<std::string, std::map<GeneId, int>> support;
    for (const auto& t : tools)
        for (const auto& [mirna, genes] : t.targets)
            for (const auto& g : genes) ++support[mirna][g];
    ConsensusTargets out;
    for (const auto& [mirna, counts] : support) {
        GeneSet s{mirna, {}};
        for (const auto& [g, c] : counts)
            if (c >= min_support) s.members.insert(g);
        if (s.size() < static_cast<std::size_t>(min_targets))
            out.dropped.push_back(mirna);
        else
            out.targets.emplace(mirna, std::move(s));
    }
    return out;
}

inline void write_targets(const std::map<std::string, GeneSet>& targets, std::ostream& out) {
    for (const auto& [mirna, set] : targets)
        for (const auto& g : set.members) out << mirna << '\t' << g << '\n';
}

// ---------------------------------------------------------------------------
// Channels

struct ChannelSpec {
    std::string name;
    const Network* network = nullptr;
    GeneSet reference;
};

/// One microRNA's result in one channel. `scored` is false for the null marker.
struct ChannelScore {
    bool scored = false;
    std::string note;
    std::size_t mapped_targets = 0;
    double es1 = std::numeric_limits<double>::quiet_NaN();
    double es2 = std::numeric_limits<double>::quiet_NaN();
    double es = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    std::size_t permutations = 0;
    std::vector<double> null; ///< sorted null ES samples
};

struct ChannelRun {
    std::string name;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t reference_size = 0;
    std::size_t reference_mapped = 0;
    std::map<std::string, ChannelScore> scores;
    std::vector<std::string> errors;
};

/// Observed association score and add-one permutation p-value for every
/// microRNA against the channel's reference set.
inline ChannelRun run_channel(const ChannelSpec& channel, const std::map<std::string, GeneSet>& targets_by_mirna,
                              const RunConfig& cfg) {
    cfg.validate();
    if (!channel.network) throw StageError("channel:" + channel.name, "no network");
    const Network& net = *channel.network;
    ChannelRun run;
    run.name = channel.name;
    run.nodes = net.node_count();
    run.edges = net.edge_count();
    run.reference_size = channel.reference.size();
    const auto params = cfg.score();

    std::optional<TransitionOperator> op;
    std::optional<ChannelScorer> scorer;
    try {
        if (net.edge_count() < 2) throw DomainError("network needs at least 2 edges for rewiring");
        op.emplace(net);
        scorer.emplace(*op, channel.reference, params);
    } catch (const DomainError& e) {
        throw StageError("channel:" + channel.name, e.what());
    }
    run.reference_mapped = scorer->reference_size();

    std::vector<std::string> ids;
    std::vector<std::vector<NodeIndex>> nodes;
    for (const auto& [mirna, set] : targets_by_mirna) {
        auto& cs = run.scores[mirna];
        auto mapped = scorer->map(set);
        cs.mapped_targets = mapped.size();
        if (mapped.empty()) {
            cs.note = "no targets in " + channel.name + " network";
            continue;
        }
        try {
            const auto s = scorer->score(mapped);
            cs.es1 = s.es1.value;
            cs.es2 = s.es2.value;
            cs.es = s.es;
        } catch (const DomainError& e) {
            cs.note = e.what();
            run.errors.push_back(mirna + ": " + e.what());
            continue;
        }
        ids.push_back(mirna);
        nodes.push_back(std::move(mapped));
    }

    const auto m = static_cast<std::size_t>(cfg.permutations);
    std::vector<std::vector<double>> samples(ids.size(), std::vector<double>(m, 0.0));
    std::vector<std::string> failure(ids.size());
    std::mutex failure_mutex;
    auto record_failure = [&](std::size_t i, const std::string& what) {
        std::lock_guard lock(failure_mutex);
        if (failure[i].empty()) failure[i] = what;
    };

    if (cfg.share_rewiring) {
        detail::parallel_for(m, cfg.threads, [&](std::size_t k) {
            const auto rewired = degree_preserving_rewire(net, cfg.swap_factor, stable_seed(cfg.base_seed, channel.name, "", k));
            const TransitionOperator rop(rewired);
            const ChannelScorer rscorer(rop, channel.reference, params);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                try {
                    samples[i][k] = rscorer.score(nodes[i]).es;
                } catch (const DomainError& e) {
                    record_failure(i, e.what());
                }
            }
        });
    } else {
        detail::parallel_for(ids.size() * m, cfg.threads, [&](std::size_t task) {
            const auto i = task / m;
            const auto k = task % m;
            try {
                const auto rewired =
                    degree_preserving_rewire(net, cfg.swap_factor, stable_seed(cfg.base_seed, channel.name, ids[i], k));
                const TransitionOperator rop(rewired);
                samples[i][k] = ChannelScorer(rop, channel.reference, params).score(nodes[i]).es;
            } catch (const DomainError& e) {
                record_failure(i, e.what());
            }
        });
    }

    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto& cs = run.scores[ids[i]];
        if (!failure[i].empty()) {
            cs.note = "null distribution failed: " + failure[i];
            run.errors.push_back(ids[i] + ": " + cs.note);
            continue;
        }
        cs.p = empirical_pvalue(cs.es, samples[i]);
        cs.permutations = m;
        std::sort(samples[i].begin(), samples[i].end());
        cs.null = std::move(samples[i]);
        cs.scored = true;
    }
    return run;
}

// ---------------------------------------------------------------------------
// Full run

struct PipelineInputs {
    std::vector<ToolTargets> tool_targets;
    Network ppi;
    GeneSet disease_genes;
    GeneSet tfs;
    std::optional<ExpressionMatrix> expression;
    std::optional<Network> coexpr_network; ///< used when no expression matrix is given
    std::optional<GeneSet> degs;           ///< used when no expression matrix is given
    std::optional<std::set<std::string>> positives;
    std::optional<std::set<std::string>> negatives;
};

struct MirnaRecord {
    std::string mirna;
    std::map<std::string, ChannelScore> channels;
    double statistic = std::numeric_limits<double>::quiet_NaN();
    double combined_p = std::numeric_limits<double>::quiet_NaN();
    std::size_t rank = 0; ///< 0 for appendix records
    std::string note;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunReport {
    RunConfig config;
    std::vector<StageTiming> timings;
    std::vector<std::pair<std::string, std::string>> facts; ///< ordered key/value summary
    std::vector<std::string> warnings;
    std::vector<std::string> dropped_mirnas;
    SoftThresholdReport soft_threshold;
    bool soft_threshold_run = false;

    template <class T>
    void fact(std::string key, const T& value) {
        std::ostringstream os;
        os << value;
        facts.emplace_back(std::move(key), os.str());
    }
};

struct Evaluation {
    std::string label; ///< "combined" or a channel name
    RocCurve roc;
    std::vector<TopAuc> top;
    std::size_t positives = 0;
    std::size_t non_positives = 0;
};

struct PipelineResult {
    std::vector<MirnaRecord> ranked;
    std::vector<MirnaRecord> appendix;
    std::map<std::string, ChannelRun> channel_runs;
    RunReport report;
    std::vector<Evaluation> evaluations;
};

/// Orders records by ascending combined p, ties by id, and numbers them 1..n.
inline void assign_ranks(std::vector<MirnaRecord>& records) {
    std::sort(records.begin(), records.end(), [](const MirnaRecord& a, const MirnaRecord& b) {
        return a.combined_p != b.combined_p ? a.combined_p < b.combined_p : a.mirna < b.mirna;
    });
    for (std::size_t i = 0; i < records.size(); ++i) records[i].rank = i + 1;
}

/// Scores evaluated against labels; ids absent from the scored set are dropped.
inline std::optional<Evaluation> evaluate_scores(std::string label, std::vector<ScoredEntry> entries,
                                                 const std::set<std::string>& positives,
                                                 const std::set<std::string>& negatives,
                                                 std::span<const std::size_t> top_ns) {
    std::set<std::string> ids;
    for (const auto& e : entries) ids.insert(e.id);
    std::set<std::string> pos, neg;
    for (const auto& p : positives)
        if (ids.count(p)) pos.insert(p);
    for (const auto& n : negatives)
        if (ids.count(n) && !pos.count(n)) neg.insert(n);
    if (pos.empty() || pos.size() == entries.size()) return std::nullopt;
    const auto n_entries = entries.size();
    LabeledScores ls(std::move(entries), std::move(pos), std::move(neg));
    Evaluation ev;
    ev.label = std::move(label);
    ev.roc = roc_and_auc(ls);
    ev.positives = ls.positive_count();
    ev.non_positives = ls.non_positive_count();
    for (const auto n : top_ns) {
        if (n > n_entries) {
            ev.top.push_back({n, std::numeric_limits<double>::quiet_NaN(), true});
            continue;
        }
        const std::size_t one[1] = {n};
        ev.top.push_back(auc_at_top(ls, one).front());
    }
    return ev;
}

inline PipelineResult run_pipeline(const RunConfig& cfg, const PipelineInputs& in) {
    cfg.validate();
    PipelineResult result;
    auto& rep = result.report;
    rep.config = cfg;

    using clock = std::chrono::steady_clock;
    auto timed = [&](const std::string& stage, auto&& fn) {
        const auto t0 = clock::now();
        try {
            fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
        rep.timings.push_back({stage, std::chrono::duration<double>(clock::now() - t0).count()});
    };

    // Targets
    std::map<std::string, GeneSet> targets;
    timed("targets", [&] {
        const auto cons = consensus_targets(in.tool_targets, cfg.min_support, cfg.min_targets);
        targets = cons.targets;
        rep.dropped_mirnas = cons.dropped;
        rep.fact("tool_lists", in.tool_targets.size());
        rep.fact("mirnas_kept", targets.size());
        rep.fact("mirnas_dropped", cons.dropped.size());
    });
    if (targets.empty()) throw StageError("targets", "no microRNA survived consensus filtering");

    // PPI
    Network ppi;
    if (cfg.channel_enabled("disease")) {
        timed("ppi", [&] {
            ppi = largest_connected_component(in.ppi);
            rep.fact("ppi_input_nodes", in.ppi.node_count());
            rep.fact("ppi_input_edges", in.ppi.edge_count());
            rep.fact("ppi_nodes", ppi.node_count());
            rep.fact("ppi_edges", ppi.edge_count());
        });
    }

    // Co-expression network and DEGs
    const bool need_coexpr = cfg.channel_enabled("deg") || cfg.channel_enabled("tf");
    Network coexpr;
    GeneSet degs{"degs", {}};
    if (need_coexpr) {
        timed("coexpr", [&] {
            if (in.expression) {
                const auto corr = correlation_matrix(*in.expression, cfg.threads);
                rep.soft_threshold = pick_soft_threshold(corr, cfg.powers, cfg.fit_cut);
                rep.soft_threshold_run = true;
                if (!rep.soft_threshold.qualified)
                    rep.warnings.push_back("no soft-threshold power reached fit_cut; using the best fit (power " +
                                           std::to_string(rep.soft_threshold.chosen_power) + ")");
                coexpr = adjacency_network(corr, rep.soft_threshold.chosen_power, cfg.min_weight);
                degs = detect_degs(*in.expression, cfg.p_cut, cfg.fold_cut).degs;
                rep.fact("expression_genes", in.expression->gene_count());
                rep.fact("expression_rows_dropped", in.expression->dropped_rows);
                rep.fact("zero_variance_genes_dropped", corr.dropped_zero_variance);
                rep.fact("soft_power", rep.soft_threshold.chosen_power);
            } else {
                if (!in.coexpr_network) throw DomainError("neither an expression matrix nor a co-expression network");
                coexpr = *in.coexpr_network;
                if (in.degs) degs = *in.degs;
            }
            rep.fact("coexpr_nodes", coexpr.node_count());
            rep.fact("coexpr_edges", coexpr.edge_count());
            rep.fact("degs", degs.size());
        });
        if (cfg.channel_enabled("deg") && degs.empty())
            throw StageError("channel:deg", "empty DEG set; channel cannot be constructed");

        timed("subnetwork", [&] {
            GeneSet seeds{"subnetwork_seeds", degs.members};
            for (const auto& [_, set] : targets) seeds.members.insert(set.members.begin(), set.members.end());
            if (cfg.include_tf_seeds) seeds.members.insert(in.tfs.members.begin(), in.tfs.members.end());
            coexpr = extract_subnetwork(coexpr, seeds, static_cast<std::size_t>(cfg.topk), cfg.rwr());
            rep.fact("subnetwork_nodes", coexpr.node_count());
            rep.fact("subnetwork_edges", coexpr.edge_count());
        });
    }

    // Channels
    for (const auto& name : channel_names()) {
        if (!cfg.channel_enabled(name)) continue;
        ChannelSpec spec;
        spec.name = name;
        if (name == "disease") {
            spec.network = &ppi;
            spec.reference = in.disease_genes;
        } else if (name == "deg") {
            spec.network = &coexpr;
            spec.reference = degs;
        } else {
            spec.network = &coexpr;
            spec.reference = in.tfs;
        }
        if (spec.reference.empty()) throw StageError("channel:" + name, "empty reference set");
        timed("channel:" + name, [&] {
            auto run = run_channel(spec, targets, cfg);
            rep.fact(name + "_reference_mapped", run.reference_mapped);
            for (const auto& e : run.errors) rep.warnings.push_back(name + ": " + e);
            result.channel_runs.emplace(name, std::move(run));
        });
    }

    // Combination and ranking
    timed("combine", [&] {
        for (const auto& [mirna, _] : targets) {
            MirnaRecord rec;
            rec.mirna = mirna;
            std::vector<double> pv;
            std::vector<std::string> missing;
            for (const auto& name : channel_names()) {
                if (!cfg.channel_enabled(name)) continue;
                const auto& cs = result.channel_runs.at(name).scores.at(mirna);
                rec.channels[name] = cs;
                if (cs.scored)
                    pv.push_back(cs.p);
                else
                    missing.push_back(name);
            }
            if (!missing.empty()) {
                rec.note = "unscored in " + detail::join(missing);
                result.appendix.push_back(std::move(rec));
                continue;
            }
            if (pv.size() == 1) {
                // Single-channel diagnostic runs rank by the channel p-value itself.
                rec.statistic = rec.channels.begin()->second.es;
                rec.combined_p = pv.front();
            } else {
                const auto c = combine(cfg.combine_method, pv, static_cast<std::size_t>(cfg.wilkinson_r));
                rec.statistic = c.statistic;
                rec.combined_p = c.p;
            }
            result.ranked.push_back(std::move(rec));
        }
        assign_ranks(result.ranked);
        rep.fact("ranked_mirnas", result.ranked.size());
        rep.fact("appendix_mirnas", result.appendix.size());
    });

    // Evaluation
    if (in.positives) {
        timed("evaluate", [&] {
            const auto negatives = in.negatives.value_or(std::set<std::string>{});
            std::vector<ScoredEntry> combined;
            for (const auto& r : result.ranked) combined.push_back({r.mirna, r.combined_p});
            if (auto ev = evaluate_scores("combined", combined, *in.positives, negatives, cfg.top_ns))
                result.evaluations.push_back(std::move(*ev));
            else
                rep.warnings.push_back("evaluation skipped: labels leave no positive or no non-positive");
            for (const auto& name : channel_names()) {
                if (!cfg.channel_enabled(name)) continue;
                std::vector<ScoredEntry> entries;
                for (const auto& r : result.ranked) entries.push_back({r.mirna, r.channels.at(name).p});
                if (auto ev = evaluate_scores(name, entries, *in.positives, negatives, cfg.top_ns))
                    result.evaluations.push_back(std::move(*ev));
            }
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output

inline constexpr const char* kRankedHeader =
    "rank\tmirna\tes_disease\tp_disease\tes_deg\tp_deg\tes_tf\tp_tf\tstatistic\tcombined_p";

namespace detail {
inline std::string num_or_na(double v) { return std::isnan(v) ? "NA" : format_sig(v, 10); }
} // namespace detail

/// Ranked table followed by a commented appendix of microRNAs lacking a score
/// in some channel.
inline void write_ranked_table(const PipelineResult& result, std::ostream& out) {
    auto row = [&](const MirnaRecord& r, const std::string& rank) {
        out << rank << '\t' << r.mirna;
        for (const auto& name : channel_names()) {
            const auto it = r.channels.find(name);
            if (it == r.channels.end() || (!it->second.scored && std::isnan(it->second.es))) {
                out << "\tNA\tNA";
                continue;
            }
            out << '\t' << detail::num_or_na(it->second.es) << '\t' << detail::num_or_na(it->second.p);
        }
        out << '\t' << detail::num_or_na(r.statistic) << '\t' << detail::num_or_na(r.combined_p) << '\n';
    };
    out << kRankedHeader << '\n';
    for (const auto& r : result.ranked) row(r, std::to_string(r.rank));
    if (!result.appendix.empty()) {
        out << "# appendix: microRNAs without a score in at least one channel\n";
        for (const auto& r : result.appendix) {
            out << "# " << r.note << '\n';
            row(r, "NA");
        }
    }
}

/// Per (microRNA, channel) detail: mapped targets, ES1, ES2, ES, p.
inline void write_channel_table(const PipelineResult& result, std::ostream& out) {
    out << "mirna\tchannel\tmapped_targets\tes1\tes2\tes\tp\tpermutations\tnote\n";
    for (const auto& [name, run] : result.channel_runs)
        for (const auto& [mirna, cs] : run.scores)
            out << mirna << '\t' << name << '\t' << cs.mapped_targets << '\t' << detail::num_or_na(cs.es1) << '\t'
                << detail::num_or_na(cs.es2) << '\t' << detail::num_or_na(cs.es) << '\t' << detail::num_or_na(cs.p)
                << '\t' << cs.permutations << '\t' << cs.note << '\n';
}

inline void write_soft_threshold_report(const SoftThresholdReport& rep, std::ostream& out) {
    out << "power\tscale_free_fit\tslope\tr_squared\tmean_connectivity\tfittable\tchosen\n";
    for (const auto& r : rep.rows)
        out << r.power << '\t' << detail::num_or_na(r.scale_free_fit) << '\t' << detail::format_sig(r.slope) << '\t'
            << detail::format_sig(r.r_squared) << '\t' << detail::format_sig(r.mean_connectivity) << '\t'
            << (r.fittable ? "yes" : "no") << '\t' << (r.power == rep.chosen_power ? "yes" : "no") << '\n';
    if (!rep.qualified) out << "# no power reached fit_cut " << detail::format_sig(rep.fit_cut) << "; best fit taken\n";
}

inline void write_roc(const Evaluation& ev, std::ostream& out) {
    out << "fpr\ttpr\tthreshold\n";
    for (const auto& p : ev.roc.points)
        out << detail::format_sig(p.fpr) << '\t' << detail::format_sig(p.tpr) << '\t' << detail::format_sig(p.threshold)
            << '\n';
}

inline void write_auc_summary(std::span<const Evaluation> evs, std::ostream& out) {
    out << "label\tsubset\tauc\tpositives\tnon_positives\n";
    for (const auto& ev : evs) {
        out << ev.label << "\tall\t" << detail::format_sig(ev.roc.auc) << '\t' << ev.positives << '\t'
            << ev.non_positives << '\n';
        for (const auto& t : ev.top)
            out << ev.label << "\ttop" << t.n << '\t' << (t.skipped ? "NA" : detail::format_sig(t.auc)) << "\t\t\n";
    }
}

/// Structured text: config echo, counts, warnings, stage timings.
inline void write_report(const RunReport& rep, std::ostream& out) {
    out << "[config]\n";
    write_config(rep.config, out);
    out << "\n[summary]\n";
    for (const auto& [k, v] : rep.facts) out << k << " = " << v << '\n';
    out << "\n[dropped_mirnas]\n";
    for (const auto& m : rep.dropped_mirnas) out << m << '\n';
    out << "\n[warnings]\n";
    for (const auto& w : rep.warnings) out << w << '\n';
    out << "\n[timings]\n";
    for (const auto& t : rep.timings) out << t.stage << " = " << detail::format_sig(t.seconds, 4) << "s\n";
}

} // namespace camirada
